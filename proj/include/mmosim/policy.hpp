#pragma once

// Player-agent planners. Every policy maps a PolicyContext to one of the four
// actions; implementations are heuristic (scored softmax), replay (recorded
// trajectory lookup), fixed (tests) and remote (wire protocol to an external
// decision service such as an LLM agent).

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "mmosim/domain.hpp"
#include "mmosim/outbound_pool.hpp"
#include "mmosim/rng.hpp"

namespace mmosim {

struct ActionDecision {
  Action action = Action::Offline;
  std::string rationale;
  double latency_ms = 0.0;
};

using ActionScores = std::array<double, kNumActions>;
using ActionMask = std::array<bool, kNumActions>;

struct HeuristicWeights {
  std::array<ActionScores, kNumClasses> base{};
  double loss_buy = 0.0;            // beta1: loss streak x spend propensity -> Buy
  double frustration_offline = 0.0; // beta2: (1 - tolerance) after a loss -> Offline
  double session_over_offline = 0.0;// beta3: session exhausted -> Offline
  double poor_battle = 0.0;         // beta4: balance below reserve floor -> Battle
  double surplus_sell = 0.0;        // beta5: holds tradables -> Sell
  double temperature = 1.0;
  /// Balance threshold for beta4; defaults to the context's cheapest price.
  std::optional<Currency> reserve_floor;
  std::string version;

  static HeuristicWeights from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  /// The shipped weight table.
  static const HeuristicWeights& defaults();
};

/// Raw (unmasked) scores of each action.
ActionScores heuristic_score(const PolicyContext& ctx, const HeuristicWeights& w);

/// Actions available in this context: Buy needs a shop or the black market,
/// Sell needs a tradable item and a trade channel.
ActionMask valid_actions(const PolicyContext& ctx);

/// Softmax over masked scores at the weights' temperature (greedy at 0).
std::array<double, kNumActions> action_probabilities(const PolicyContext& ctx,
                                                     const HeuristicWeights& w);

/// Consecutive losses at the end of ctx.last_outcomes.
int loss_streak(const PolicyContext& ctx);

class Policy {
 public:
  virtual ~Policy() = default;
  /// Precondition: ctx.state is Online or Market.
  virtual ActionDecision decide(const PolicyContext& ctx, RngStream& rng) = 0;
  virtual std::string kind() const = 0;
  /// Outcome of the daily session-start roll for an offline agent, or
  /// nullopt to let the engine roll against activeness.
  virtual std::optional<bool> session_start(const PolicyContext& ctx);
};

class HeuristicPolicy : public Policy {
 public:
  explicit HeuristicPolicy(HeuristicWeights weights = HeuristicWeights::defaults())
      : weights_(std::move(weights)) {}
  ActionDecision decide(const PolicyContext& ctx, RngStream& rng) override;
  std::string kind() const override { return "heuristic"; }
  const HeuristicWeights& weights() const { return weights_; }

 private:
  HeuristicWeights weights_;
};

/// Always returns the same action (when valid; otherwise the first valid one).
class FixedPolicy : public Policy {
 public:
  explicit FixedPolicy(Action a) : action_(a) {}
  ActionDecision decide(const PolicyContext& ctx, RngStream& rng) override;
  std::string kind() const override { return "fixed:" + std::string(to_string(action_)); }

 private:
  Action action_;
};

struct TrajectoryRecord {
  Uid uid = 0;
  std::int64_t t = 0;
  PolicyContext context;
  Action action = Action::Offline;

  bool operator==(const TrajectoryRecord&) const = default;
};

/// Reproduces recorded actions keyed by (uid, abs step).
class ReplayPolicy : public Policy {
 public:
  explicit ReplayPolicy(const std::vector<TrajectoryRecord>& corpus);
  ActionDecision decide(const PolicyContext& ctx, RngStream& rng) override;
  std::optional<bool> session_start(const PolicyContext& ctx) override;
  std::string kind() const override { return "replay"; }

 private:
  const TrajectoryRecord& lookup(const PolicyContext& ctx) const;
  std::map<std::pair<Uid, std::int64_t>, TrajectoryRecord> table_;
};

struct RemoteEndpoint {
  std::string host = "127.0.0.1";
  int port = 0;
  std::string path = "/decide";
  int deadline_ms = 2000;

  /// Parses "http://host:port/path".
  static RemoteEndpoint parse(const std::string& url, int deadline_ms = 2000);
};

/// Sends the context as a JSON request and parses {action, rationale?}.
/// Acquires an outbound slot for the duration of the call. Throws SimError
/// with Timeout, MalformedResponse or UnknownAction.
ActionDecision remote_decide(const RemoteEndpoint& endpoint, OutboundPool& pool,
                             const PolicyContext& ctx);

/// Parses a response document; exposed for tests.
ActionDecision parse_remote_response(const std::string& body);

class RemotePolicy : public Policy {
 public:
  RemotePolicy(RemoteEndpoint endpoint, OutboundPool& pool)
      : endpoint_(std::move(endpoint)), pool_(pool) {}
  ActionDecision decide(const PolicyContext& ctx, RngStream& rng) override;
  std::string kind() const override { return "remote"; }

 private:
  RemoteEndpoint endpoint_;
  OutboundPool& pool_;
};

}  // namespace mmosim
