#pragma once

// Synthetic ground truth: populations drawn from the five player clusters,
// season match logs drawn from known curves (the oracle for battle-model
// fitting), and trajectory corpora for the accuracy harness.

#include <array>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmosim/battle.hpp"
#include "mmosim/domain.hpp"
#include "mmosim/policy.hpp"

namespace mmosim {

struct FieldDist {
  double mean = 0.5;
  double spread = 0.0;  // standard deviation before clamping
  double lo = 0.0;
  double hi = 1.0;
};

struct TrueCurves {
  double win_w0 = 0.0;
  double win_w1 = 0.0;
  double median_a = 100.0;  // loss-income median: median_a + median_b * n
  double median_b = 0.0;
  double sigma = 0.0;
  double lambda_win = 1.0;

  double win_probability(int n) const;
  double median_income(int n) const;
  /// Expected income at n, marginal over the win draw.
  double mean_income(int n) const;
};

struct ClusterSpec {
  ProfileClass profile_class = ProfileClass::StableDevelopment;
  double mix_weight = 0.2;
  FieldDist skill, frustration_tolerance, spend_propensity, activeness, habit_informal_trade;
  FieldDist session_length_mean{4, 0, 1, 48};
  TrueCurves truth;
};

using ClusterTable = std::array<ClusterSpec, kNumClasses>;

/// Parses the clusters document; throws InvalidSpec on bad weights or
/// missing classes.
ClusterTable clusters_from_json(const nlohmann::json& j);
nlohmann::json clusters_to_json(const ClusterTable& t);
const ClusterTable& default_clusters();

/// Largest-remainder apportionment of n over the mix weights.
std::array<int, kNumClasses> apportion(const ClusterTable& specs, int n);

/// Profiles with uids 0..n-1 (first_uid offset optional), classes shuffled.
std::vector<PlayerProfile> generate_population(const ClusterTable& specs, int n,
                                               std::uint64_t seed, Uid first_uid = 0);

struct SeasonOptions {
  int players_per_class = 200;
  int min_matches = 35;
  int max_matches = 40;
  std::uint64_t seed = 1;
};

struct SeasonLogs {
  std::vector<MatchRecord> train;    // season 1
  std::vector<MatchRecord> holdout;  // season 2, same curves, fresh noise
};

SeasonLogs generate_season_logs(const ClusterTable& specs, const SeasonOptions& options);

/// Battle model fitted on a fixed synthetic season from the default
/// clusters; the model runs use unless a config supplies one.
const BattleModel& default_battle_model();

/// One record per decision point on `day` (ActionChosen events).
/// `executed_steps` is how many steps the log covers.
std::vector<TrajectoryRecord> export_trajectories(const std::vector<Event>& log, std::int64_t day,
                                                  int steps_per_day, std::int64_t executed_steps);
std::vector<TrajectoryRecord> export_all_trajectories(const std::vector<Event>& log);

std::string trajectories_to_text(const std::vector<TrajectoryRecord>& corpus,
                                 const nlohmann::json& header);
std::vector<TrajectoryRecord> trajectories_from_text(const std::string& text, int steps_per_day);

}  // namespace mmosim
