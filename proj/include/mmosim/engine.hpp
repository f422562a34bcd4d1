#pragma once

// The simulation loop. Each step applies due interventions, expires stale
// listings, delivers messages, settles finished battles, rolls session
// starts for offline agents at the first step of a day, then plans every
// agent at a decision point (optionally in parallel) and executes the
// decisions serially in ascending uid order.

#include <array>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmosim/config.hpp"
#include "mmosim/economy.hpp"
#include "mmosim/intervention.hpp"
#include "mmosim/ledger.hpp"
#include "mmosim/messaging.hpp"
#include "mmosim/outbound_pool.hpp"
#include "mmosim/policy.hpp"
#include "mmosim/rng.hpp"

namespace mmosim {

inline constexpr int kSnapshotVersion = 1;

/// abs_step = floor(elapsed / accel), clamped to the last step of the run.
SimTime map_time(double wall_elapsed_s, const RunConfig& cfg);

struct PendingTask {
  std::int64_t completes_at = 0;
  int match_index = 0;
  bool operator==(const PendingTask&) const = default;
};

struct AgentRuntime {
  PlayerProfile profile;
  AgentState state = AgentState::Offline;
  std::optional<PendingTask> pending_task;  // only battles are tasks
  int session_steps_remaining = 0;
  int match_count_this_season = 0;
  int frauds_suffered = 0;
  std::deque<BattleOutcome> last_outcomes;
  std::deque<Action> recent_actions;
  std::vector<std::string> inbox;
  std::deque<Event> history;
  std::string last_rationale;
};

class Simulation {
 public:
  using StepSink = std::function<void(const std::vector<Event>& events, std::int64_t step)>;

  explicit Simulation(RunConfig cfg);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Executes up to n steps and returns their events. Throws RunFinished if
  /// the run is already complete.
  std::vector<Event> advance(std::int64_t n);
  /// Same as advance without collecting; returns the number of events.
  std::size_t run_steps(std::int64_t n);

  /// Called once per executed step with that step's events (the commit
  /// point used by the log writer).
  void set_step_sink(StepSink sink) { sink_ = std::move(sink); }

  /// Next step to execute.
  std::int64_t current_step() const { return step_; }
  bool finished() const { return step_ >= cfg_.total_steps(); }
  Seq next_seq() const { return next_seq_; }

  InterventionId schedule(const Intervention& iv);
  void bind_policy(Uid uid, std::shared_ptr<Policy> policy);

  const RunConfig& config() const { return cfg_; }
  const Ledger& ledger() const { return ledger_; }
  const Economy& economy() const { return economy_; }
  MessageBus& bus() { return bus_; }
  const WorldParams& world() const { return world_; }
  const InterventionTimeline& timeline() const { return timeline_; }
  const std::map<Uid, AgentRuntime>& agents() const { return agents_; }
  const AgentRuntime& agent(Uid uid) const;
  OutboundPool& pool() { return *pool_; }

  /// Context an agent would see right now.
  PolicyContext context_for(Uid uid) const;

  /// Full state at the current step boundary.
  nlohmann::json snapshot() const;
  /// Throws VersionMismatch or CorruptSnapshot.
  static std::unique_ptr<Simulation> restore(const nlohmann::json& snap);

 private:
  struct Streams {
    std::array<RngStream, 6> s;
    RngStream& operator[](StreamPurpose p) { return s[static_cast<std::size_t>(p) - 1]; }
  };

  void step_once(std::vector<Event>& out);
  void emit(std::vector<Event>& out, std::optional<Uid> uid, EventPayload payload);
  void transition(std::vector<Event>& out, AgentRuntime& a, AgentState to);
  void settle_battle(std::vector<Event>& out, AgentRuntime& a);
  void roll_session(std::vector<Event>& out, AgentRuntime& a);
  void deliver(std::vector<Event>& out, AgentRuntime& a);
  ActionDecision plan(AgentRuntime& a, const PolicyContext& ctx, std::optional<std::string>& failure);
  void execute(std::vector<Event>& out, AgentRuntime& a, const ActionDecision& d);
  void execute_buy(std::vector<Event>& out, AgentRuntime& a);
  void execute_sell(std::vector<Event>& out, AgentRuntime& a);
  Policy& policy_for(Uid uid);
  void init_policies();
  Currency shop_floor_price() const;

  RunConfig cfg_;
  std::int64_t step_ = 0;
  Seq next_seq_ = 1;
  std::map<Uid, AgentRuntime> agents_;
  std::map<Uid, Streams> rng_;
  Ledger ledger_;
  Economy economy_;
  MessageBus bus_;
  WorldParams world_;
  InterventionTimeline timeline_;
  std::unique_ptr<OutboundPool> pool_;
  std::map<Uid, std::shared_ptr<Policy>> bound_;
  std::shared_ptr<Policy> heuristic_;
  StepSink sink_;
};

}  // namespace mmosim
