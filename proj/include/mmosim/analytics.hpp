#pragma once

// Macroscopic statistics recomputed from (config + log), the stepwise
// accuracy harness and the intervention before/after report.
//
// A frame at step t describes the boundary before step t executes: balances
// and states reflect steps [0, t). Action shares are those of step t-1 and
// the informal-trade share covers the trailing window [t-W, t).

#include <array>
#include <map>
#include <optional>
#include <vector>

#include "json.hpp"
#include "mmosim/config.hpp"
#include "mmosim/domain.hpp"
#include "mmosim/policy.hpp"

namespace mmosim {

/// Population Gini: sum_i sum_j |x_i - x_j| / (2 n^2 mean); 0 when mean is 0.
double gini(std::vector<Currency> values);

/// Wealth bin edges: [0,1), then [2^k, 2^(k+1)) for k = 0..19, then >= 2^20.
inline constexpr std::size_t kWealthBins = 22;
std::size_t wealth_bin(Currency balance);
/// Lower edge of each bin.
std::array<Currency, kWealthBins> wealth_bin_edges();

struct TradeCounts {
  std::int64_t informal = 0;
  std::int64_t black_market = 0;
  std::int64_t npc = 0;
  std::int64_t market() const { return black_market + npc; }
  /// informal / (informal + market); nullopt when there were no trades.
  std::optional<double> informal_share() const;
};

struct StatsFrame {
  std::int64_t step = 0;
  std::array<int, kWealthBins> wealth_histogram{};
  double gini = 0.0;
  /// [class][wealth quintile 0 = poorest]
  std::array<std::array<int, 5>, kNumClasses> rank_distribution{};
  Currency npc_spend = 0;  // cumulative NPC shop spend (recycled to reserve)
  Currency tax_burned = 0;
  double activeness = 0.0;  // fraction not offline
  std::array<int, kNumStates> agents_by_state{};
  Currency players_total = 0, reserve = 0, burn = 0, total = 0;
  std::array<int, kNumActions> action_counts{};
  std::optional<std::array<double, kNumActions>> action_shares;
  std::int64_t window = 0;
  TradeCounts window_trades;
  std::optional<double> informal_trade_share;

  nlohmann::json to_json() const;
};

/// Folds a log forward from the configured initial state.
class LogReplay {
 public:
  explicit LogReplay(const RunConfig& cfg);
  void apply(const Event& e);

  const std::map<Uid, Currency>& balances() const { return balances_; }
  const std::map<Uid, AgentState>& states() const { return states_; }
  const std::map<Uid, ProfileClass>& classes() const { return classes_; }
  Currency reserve() const { return reserve_; }
  Currency burn() const { return burn_; }
  Currency npc_spend() const { return npc_spend_; }
  Currency tax_burned() const { return burn_; }
  Currency initial_total() const { return initial_total_; }

 private:
  std::map<Uid, Currency> balances_;
  std::map<Uid, AgentState> states_;
  std::map<Uid, ProfileClass> classes_;
  Currency reserve_ = 0, burn_ = 0, npc_spend_ = 0, initial_total_ = 0;
};

/// Throws StepNotReached when step > steps_done.
StatsFrame compute_frame(const RunConfig& cfg, const std::vector<Event>& log, std::int64_t steps_done,
                         std::int64_t step, std::int64_t window);

/// Frames at every day boundary 0..days (one pass over the log).
std::vector<StatsFrame> daily_frames(const RunConfig& cfg, const std::vector<Event>& log,
                                     std::int64_t steps_done, std::int64_t window);

TradeCounts count_trades(const std::vector<Event>& log, std::int64_t from_step, std::int64_t to_step);

struct Prediction {
  Uid uid = 0;
  std::int64_t t = 0;
  Action action = Action::Offline;
};

struct AccuracyReport {
  double accuracy = 0.0;
  std::size_t total = 0;
  std::size_t correct = 0;
  std::array<std::optional<double>, kNumActions> per_class_recall{};
  std::array<std::array<std::size_t, kNumActions>, kNumActions> confusion{};  // [truth][pred]
  std::array<std::size_t, kNumActions> class_distribution{};

  nlohmann::json to_json() const;
};

/// Throws MissingTruth or DuplicatePrediction.
AccuracyReport stepwise_accuracy(const std::vector<Prediction>& predictions,
                                 const std::vector<TrajectoryRecord>& truth);

/// Predictions of a policy over a corpus: decide() on online/market records,
/// the session-start hook (Offline unless it starts a session) otherwise.
std::vector<Prediction> predict_corpus(Policy& policy, const std::vector<TrajectoryRecord>& corpus,
                                       std::uint64_t seed);
std::vector<Prediction> majority_predictions(const std::vector<TrajectoryRecord>& corpus);

std::string predictions_to_text(const std::vector<Prediction>& preds);
std::vector<Prediction> predictions_from_text(const std::string& text);

struct ShareSeriesPoint {
  std::int64_t day = 0;
  TradeCounts trades;
};

struct InterventionReport {
  InterventionId intervention_id = 0;
  std::int64_t at_step = 0;
  std::int64_t window = 0;
  std::int64_t settle = 0;
  TradeCounts pre, post;
  std::vector<ShareSeriesPoint> series;

  nlohmann::json to_json() const;
};

/// pre = [at - W, at), post = [at + settle, at + settle + W) clipped to the
/// log. Throws NotApplied when the intervention never fired.
InterventionReport intervention_report(const std::vector<Event>& log, InterventionId id,
                                       std::int64_t window, std::int64_t settle, int steps_per_day,
                                       std::int64_t steps_done);

}  // namespace mmosim
