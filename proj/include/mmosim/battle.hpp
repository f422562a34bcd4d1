#pragma once

// The currency faucet. Matches are resolved per player from per-class fitted
// curves over the match index n: a logistic win curve and a log-normal
// income curve with a win multiplier, both blended with binned empirical
// estimates where a bin has enough samples.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmosim/domain.hpp"
#include "mmosim/rng.hpp"

namespace mmosim {

struct MatchRecord {
  Uid uid = 0;
  ProfileClass profile_class = ProfileClass::StableDevelopment;
  int season = 1;
  int match_index = 1;
  bool win = false;
  Currency income = 0;

  auto operator<=>(const MatchRecord&) const = default;
};

struct CurveBin {
  int count = 0;
  int wins = 0;
  double log_mu = 0.0;     // mean of win-adjusted log income
  double log_sigma = 0.0;  // sd of win-adjusted log income

  bool operator==(const CurveBin&) const = default;
};

struct ClassCurves {
  double win_w0 = 0.0;
  double win_w1 = 0.0;
  double mu_a = 0.0;  // parametric log-income median: mu(n) = mu_a + mu_b * n
  double mu_b = 0.0;
  double sigma = 0.0;
  double lambda_win = 1.0;
  std::vector<CurveBin> bins;  // bins[n - 1]

  bool operator==(const ClassCurves&) const = default;
};

class BattleModel {
 public:
  BattleModel() = default;

  /// Same curves for every class: constant win probability, point-mass
  /// income (sigma 0) and a fixed win multiplier.
  static BattleModel constant(double p_win, double income, double lambda_win = 1.0);

  bool fitted(ProfileClass c) const { return classes_[index_of(c)].has_value(); }
  const ClassCurves& curves(ProfileClass c) const;
  void set_curves(ProfileClass c, ClassCurves curves) { classes_[index_of(c)] = std::move(curves); }

  double win_probability(ProfileClass c, int n) const;
  /// (mu, sigma) of the loss-baseline log-normal income at match n.
  std::pair<double, double> income_params(ProfileClass c, int n) const;
  double lambda_win(ProfileClass c) const { return curves(c).lambda_win; }
  /// Expected income at n, marginal over the win draw.
  double mean_income(ProfileClass c, int n) const;

  int min_bin_count() const { return min_bin_count_; }
  void set_min_bin_count(int v) { min_bin_count_ = v; }
  const std::string& fitted_on() const { return fitted_on_; }
  void set_fitted_on(std::string fp) { fitted_on_ = std::move(fp); }

  nlohmann::json to_json() const;
  static BattleModel from_json(const nlohmann::json& j);

  bool operator==(const BattleModel&) const = default;

 private:
  double bin_weight(const CurveBin& b) const;

  std::array<std::optional<ClassCurves>, kNumClasses> classes_;
  int min_bin_count_ = 30;
  std::string fitted_on_;
};

/// Draws one match. `lambda_override` replaces the fitted win multiplier.
BattleOutcome resolve_match(const BattleModel& model, const PlayerProfile& profile, int n,
                            RngStream& rng, SimTime step,
                            std::optional<double> lambda_override = std::nullopt);

struct FitOptions {
  int min_bin_count = 30;
  int band_lo = 35;
  int band_hi = 40;
};

/// Fingerprint of a record set, independent of input order.
std::string dataset_fingerprint(std::vector<MatchRecord> logs);

/// Keeps records of players whose per-season match count is within the band.
std::vector<MatchRecord> filter_match_band(const std::vector<MatchRecord>& logs, int lo, int hi);

BattleModel fit(std::vector<MatchRecord> logs, const FitOptions& options = {});

struct CurvePoint {
  int n = 0;
  double p_win = 0.0;
  double mean_income = 0.0;

  bool operator==(const CurvePoint&) const = default;
};

std::vector<CurvePoint> predict_curve(const BattleModel& model, ProfileClass c, int n_max);

/// Empirical per-n win rate and mean income of one class (n = 1..n_max;
/// NaN where a bin is empty).
std::vector<CurvePoint> empirical_curve(const std::vector<MatchRecord>& logs, ProfileClass c,
                                        int n_max);

struct HoldoutReport {
  std::array<double, kNumClasses> win_mae{};
  std::array<double, kNumClasses> income_rel_error{};
  std::array<int, kNumClasses> min_bin_samples{};
};

/// Compares model predictions to a holdout season over n = 1..n_max.
HoldoutReport evaluate_holdout(const BattleModel& model, const std::vector<MatchRecord>& holdout,
                               int n_max);

/// Match-log file: one JSON record per line after a header line.
std::string match_logs_to_text(const std::vector<MatchRecord>& logs, const nlohmann::json& header);
std::vector<MatchRecord> match_logs_from_text(const std::string& text);

}  // namespace mmosim
