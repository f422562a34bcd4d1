#include "mmosim/battle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "mmosim/hash.hpp"

namespace mmosim {

using nlohmann::json;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct BinAccum {
  int count = 0;
  int wins = 0;
  double sum_log_win = 0.0;
  double sum_log_loss = 0.0;
  std::vector<double> logs;
  std::vector<bool> win_flags;
};

// Newton-Raphson logistic regression of win ~ w0 + w1 * n on binned counts.
std::pair<double, double> fit_logistic(const std::vector<CurveBin>& bins) {
  double total = 0, wins = 0;
  for (const auto& b : bins) {
    total += b.count;
    wins += b.wins;
  }
  if (total == 0) return {0.0, 0.0};
  const double rate = std::clamp(wins / total, 1e-6, 1.0 - 1e-6);
  double w0 = std::log(rate / (1.0 - rate)), w1 = 0.0;
  for (int iter = 0; iter < 50; ++iter) {
    double g0 = 0, g1 = 0, h00 = 0, h01 = 0, h11 = 0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
      const auto& b = bins[i];
      if (b.count == 0) continue;
      const double n = static_cast<double>(i + 1);
      const double p = sigmoid(w0 + w1 * n);
      const double r = b.wins - b.count * p;
      const double w = b.count * p * (1.0 - p);
      g0 += r;
      g1 += r * n;
      h00 += w;
      h01 += w * n;
      h11 += w * n * n;
    }
    const double det = h00 * h11 - h01 * h01;
    if (!(std::abs(det) > 1e-12)) break;
    const double d0 = (h11 * g0 - h01 * g1) / det;
    const double d1 = (h00 * g1 - h01 * g0) / det;
    w0 = std::clamp(w0 + d0, -30.0, 30.0);
    w1 = std::clamp(w1 + d1, -5.0, 5.0);
    if (std::abs(d0) < 1e-10 && std::abs(d1) < 1e-10) break;
  }
  return {w0, w1};
}

}  // namespace

BattleModel BattleModel::constant(double p_win, double income, double lambda_win) {
  if (!(p_win >= 0.0 && p_win <= 1.0)) throw SimError(ErrorCode::InvalidValue, "p_win out of [0,1]");
  if (!(income > 0.0)) throw SimError(ErrorCode::InvalidValue, "income must be > 0");
  if (!(lambda_win >= 1.0)) throw SimError(ErrorCode::InvalidValue, "lambda_win must be >= 1");
  ClassCurves c;
  // Saturated logit so that p = 0 and p = 1 stay exact.
  c.win_w0 = p_win <= 0.0 ? -std::numeric_limits<double>::infinity()
             : p_win >= 1.0 ? std::numeric_limits<double>::infinity()
                            : std::log(p_win / (1.0 - p_win));
  c.mu_a = std::log(income);
  c.lambda_win = lambda_win;
  BattleModel m;
  for (ProfileClass k : kAllClasses) m.set_curves(k, c);
  m.fitted_on_ = "constant";
  return m;
}

const ClassCurves& BattleModel::curves(ProfileClass c) const {
  const auto& slot = classes_[index_of(c)];
  if (!slot)
    throw SimError(ErrorCode::ModelNotFitted,
                   "no curves for class " + std::string(to_string(c)));
  return *slot;
}

double BattleModel::bin_weight(const CurveBin& b) const {
  if (b.count < min_bin_count_ || b.count == 0) return 0.0;
  return static_cast<double>(b.count) / (b.count + min_bin_count_);
}

double BattleModel::win_probability(ProfileClass c, int n) const {
  const ClassCurves& cc = curves(c);
  if (n < 1) throw SimError(ErrorCode::InvalidValue, "match index must be >= 1");
  const double z = cc.win_w0 + cc.win_w1 * n;
  double p = std::isinf(z) ? (z > 0 ? 1.0 : 0.0) : sigmoid(z);
  if (static_cast<std::size_t>(n) <= cc.bins.size()) {
    const CurveBin& b = cc.bins[n - 1];
    const double w = bin_weight(b);
    if (w > 0) p = w * (static_cast<double>(b.wins) / b.count) + (1.0 - w) * p;
  }
  return std::clamp(p, 0.0, 1.0);
}

std::pair<double, double> BattleModel::income_params(ProfileClass c, int n) const {
  const ClassCurves& cc = curves(c);
  double mu = cc.mu_a + cc.mu_b * n;
  double sigma = cc.sigma;
  if (n >= 1 && static_cast<std::size_t>(n) <= cc.bins.size()) {
    const CurveBin& b = cc.bins[n - 1];
    const double w = bin_weight(b);
    if (w > 0) {
      mu = w * b.log_mu + (1.0 - w) * mu;
      sigma = w * b.log_sigma + (1.0 - w) * sigma;
    }
  }
  return {mu, std::max(0.0, sigma)};
}

double BattleModel::mean_income(ProfileClass c, int n) const {
  const auto [mu, sigma] = income_params(c, n);
  const double p = win_probability(c, n);
  return std::exp(mu + 0.5 * sigma * sigma) * (1.0 - p + p * lambda_win(c));
}

json BattleModel::to_json() const {
  json classes = json::object();
  for (ProfileClass k : kAllClasses) {
    if (!fitted(k)) continue;
    const ClassCurves& c = curves(k);
    json bins = json::array();
    for (const auto& b : c.bins)
      bins.push_back({{"count", b.count},
                      {"wins", b.wins},
                      {"log_mu", b.log_mu},
                      {"log_sigma", b.log_sigma}});
    auto finite_or_string = [](double v) -> json {
      if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
      return v;
    };
    classes[std::string(to_string(k))] = {{"win_w0", finite_or_string(c.win_w0)},
                                          {"win_w1", c.win_w1},
                                          {"mu_a", c.mu_a},
                                          {"mu_b", c.mu_b},
                                          {"sigma", c.sigma},
                                          {"lambda_win", c.lambda_win},
                                          {"bins", bins}};
  }
  return json{{"format", "mmosim.battle_model"},
              {"version", 1},
              {"fitted_on", fitted_on_},
              {"min_bin_count", min_bin_count_},
              {"classes", classes}};
}

BattleModel BattleModel::from_json(const json& j) {
  if (j.value("format", "") != "mmosim.battle_model")
    throw SimError(ErrorCode::InvalidValue, "not a battle model document");
  if (j.value("version", 0) != 1)
    throw SimError(ErrorCode::VersionMismatch, "battle model version " + j.value("version", json(0)).dump());
  BattleModel m;
  m.fitted_on_ = j.value("fitted_on", "");
  m.min_bin_count_ = j.value("min_bin_count", 30);
  auto num = [](const json& v) {
    if (v.is_string()) return v.get<std::string>() == "inf" ? std::numeric_limits<double>::infinity()
                                                             : -std::numeric_limits<double>::infinity();
    return v.get<double>();
  };
  for (const auto& [name, c] : j.at("classes").items()) {
    ClassCurves cc;
    cc.win_w0 = num(c.at("win_w0"));
    cc.win_w1 = c.at("win_w1").get<double>();
    cc.mu_a = c.at("mu_a").get<double>();
    cc.mu_b = c.at("mu_b").get<double>();
    cc.sigma = c.at("sigma").get<double>();
    cc.lambda_win = c.at("lambda_win").get<double>();
    for (const auto& b : c.at("bins"))
      cc.bins.push_back(CurveBin{b.at("count").get<int>(), b.at("wins").get<int>(),
                                 b.at("log_mu").get<double>(), b.at("log_sigma").get<double>()});
    m.set_curves(parse_class(name), std::move(cc));
  }
  return m;
}

BattleOutcome resolve_match(const BattleModel& model, const PlayerProfile& profile, int n,
                            RngStream& rng, SimTime step, std::optional<double> lambda_override) {
  if (n < 1) throw SimError(ErrorCode::InvalidValue, "match index must be >= 1");
  const ProfileClass c = profile.profile_class;
  const double p = model.win_probability(c, n);
  const bool win = rng.bernoulli(p);
  const auto [mu, sigma] = model.income_params(c, n);
  const double z = rng.normal();
  const double lambda = lambda_override.value_or(model.lambda_win(c));
  double income = std::exp(mu + sigma * z) * (win ? lambda : 1.0);
  if (!std::isfinite(income) || income < 0) income = 0;
  return BattleOutcome{profile.uid, n, win, static_cast<Currency>(std::llround(income)), step};
}

std::string dataset_fingerprint(std::vector<MatchRecord> logs) {
  std::sort(logs.begin(), logs.end());
  std::string buf;
  buf.reserve(logs.size() * 24);
  for (const auto& r : logs) {
    buf += std::to_string(r.uid) + ',' + std::to_string(index_of(r.profile_class)) + ',' +
           std::to_string(r.season) + ',' + std::to_string(r.match_index) + ',' +
           (r.win ? '1' : '0') + ',' + std::to_string(r.income) + '\n';
  }
  return sha256_hex(buf);
}

std::vector<MatchRecord> filter_match_band(const std::vector<MatchRecord>& logs, int lo, int hi) {
  std::map<std::pair<int, Uid>, int> counts;
  for (const auto& r : logs) ++counts[{r.season, r.uid}];
  std::vector<MatchRecord> out;
  for (const auto& r : logs) {
    const int c = counts[{r.season, r.uid}];
    if (c >= lo && c <= hi) out.push_back(r);
  }
  return out;
}

BattleModel fit(std::vector<MatchRecord> logs, const FitOptions& options) {
  if (options.min_bin_count < 1) throw SimError(ErrorCode::InvalidValue, "min_bin_count < 1");
  logs = filter_match_band(logs, options.band_lo, options.band_hi);
  std::sort(logs.begin(), logs.end());

  std::array<std::vector<BinAccum>, kNumClasses> acc;
  for (const auto& r : logs) {
    if (r.match_index < 1) throw SimError(ErrorCode::InvalidValue, "match index < 1 in logs");
    auto& bins = acc[index_of(r.profile_class)];
    if (bins.size() < static_cast<std::size_t>(r.match_index)) bins.resize(r.match_index);
    BinAccum& b = bins[r.match_index - 1];
    const double y = std::log(static_cast<double>(std::max<Currency>(r.income, 1)));
    ++b.count;
    if (r.win) {
      ++b.wins;
      b.sum_log_win += y;
    } else {
      b.sum_log_loss += y;
    }
    b.logs.push_back(y);
    b.win_flags.push_back(r.win);
  }

  BattleModel model;
  model.set_min_bin_count(options.min_bin_count);
  model.set_fitted_on(dataset_fingerprint(logs));

  for (ProfileClass k : kAllClasses) {
    auto& bins = acc[index_of(k)];
    if (bins.empty())
      throw SimError(ErrorCode::InsufficientData,
                     "class=" + std::string(to_string(k)) + " has no records in the match band");
    for (int n = 1; n <= options.band_lo; ++n) {
      const int count = static_cast<std::size_t>(n) <= bins.size() ? bins[n - 1].count : 0;
      if (count < options.min_bin_count)
        throw SimError(ErrorCode::InsufficientData,
                       "class=" + std::string(to_string(k)) + " n=" + std::to_string(n) +
                           " has " + std::to_string(count) + " < " +
                           std::to_string(options.min_bin_count) + " samples");
    }

    // Win multiplier: pooled within-bin difference of mean log income.
    double num = 0, den = 0;
    for (const auto& b : bins) {
      const int losses = b.count - b.wins;
      if (b.wins == 0 || losses == 0) continue;
      const double w = static_cast<double>(b.wins) * losses / b.count;
      num += w * (b.sum_log_win / b.wins - b.sum_log_loss / losses);
      den += w;
    }
    ClassCurves cc;
    cc.lambda_win = den > 0 ? std::max(1.0, std::exp(num / den)) : 1.0;
    const double log_lambda = std::log(cc.lambda_win);

    double pooled_ss = 0, pooled_df = 0;
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    cc.bins.resize(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) {
      const BinAccum& b = bins[i];
      CurveBin& out = cc.bins[i];
      out.count = b.count;
      out.wins = b.wins;
      if (b.count == 0) continue;
      double mean = 0;
      for (std::size_t s = 0; s < b.logs.size(); ++s)
        mean += b.logs[s] - (b.win_flags[s] ? log_lambda : 0.0);
      mean /= b.count;
      double ss = 0;
      for (std::size_t s = 0; s < b.logs.size(); ++s) {
        const double d = b.logs[s] - (b.win_flags[s] ? log_lambda : 0.0) - mean;
        ss += d * d;
      }
      out.log_mu = mean;
      out.log_sigma = b.count > 1 ? std::sqrt(ss / (b.count - 1)) : 0.0;
      pooled_ss += ss;
      pooled_df += b.count - 1;
      const double x = static_cast<double>(i + 1), w = b.count;
      sw += w;
      swx += w * x;
      swy += w * mean;
      swxx += w * x * x;
      swxy += w * x * mean;
    }
    const double det = sw * swxx - swx * swx;
    if (det > 1e-12) {
      cc.mu_b = (sw * swxy - swx * swy) / det;
      cc.mu_a = (swy - cc.mu_b * swx) / sw;
    } else {
      cc.mu_b = 0;
      cc.mu_a = sw > 0 ? swy / sw : 0;
    }
    cc.sigma = pooled_df > 0 ? std::sqrt(pooled_ss / pooled_df) : 0.0;
    std::tie(cc.win_w0, cc.win_w1) = fit_logistic(cc.bins);
    model.set_curves(k, std::move(cc));
  }
  return model;
}

std::vector<CurvePoint> predict_curve(const BattleModel& model, ProfileClass c, int n_max) {
  if (n_max < 1) throw SimError(ErrorCode::InvalidValue, "n_max must be >= 1");
  model.curves(c);
  std::vector<CurvePoint> out;
  out.reserve(n_max);
  for (int n = 1; n <= n_max; ++n)
    out.push_back(CurvePoint{n, model.win_probability(c, n), model.mean_income(c, n)});
  return out;
}

std::vector<CurvePoint> empirical_curve(const std::vector<MatchRecord>& logs, ProfileClass c,
                                        int n_max) {
  std::vector<double> wins(n_max, 0), income(n_max, 0), count(n_max, 0);
  for (const auto& r : logs) {
    if (r.profile_class != c || r.match_index < 1 || r.match_index > n_max) continue;
    const int i = r.match_index - 1;
    count[i] += 1;
    wins[i] += r.win ? 1 : 0;
    income[i] += static_cast<double>(r.income);
  }
  std::vector<CurvePoint> out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < n_max; ++i)
    out.push_back(CurvePoint{i + 1, count[i] > 0 ? wins[i] / count[i] : nan,
                             count[i] > 0 ? income[i] / count[i] : nan});
  return out;
}

HoldoutReport evaluate_holdout(const BattleModel& model, const std::vector<MatchRecord>& holdout,
                               int n_max) {
  HoldoutReport rep;
  for (ProfileClass k : kAllClasses) {
    const auto pred = predict_curve(model, k, n_max);
    const auto emp = empirical_curve(holdout, k, n_max);
    double mae = 0, rel = 0;
    int used = 0;
    int min_samples = std::numeric_limits<int>::max();
    std::vector<int> counts(n_max, 0);
    for (const auto& r : holdout)
      if (r.profile_class == k && r.match_index >= 1 && r.match_index <= n_max)
        ++counts[r.match_index - 1];
    for (int i = 0; i < n_max; ++i) {
      min_samples = std::min(min_samples, counts[i]);
      if (counts[i] == 0) continue;
      mae += std::abs(pred[i].p_win - emp[i].p_win);
      rel += std::abs(pred[i].mean_income - emp[i].mean_income) / emp[i].mean_income;
      ++used;
    }
    rep.win_mae[index_of(k)] = used ? mae / used : std::numeric_limits<double>::quiet_NaN();
    rep.income_rel_error[index_of(k)] = used ? rel / used : std::numeric_limits<double>::quiet_NaN();
    rep.min_bin_samples[index_of(k)] = min_samples;
  }
  return rep;
}

std::string match_logs_to_text(const std::vector<MatchRecord>& logs, const json& header) {
  std::string out = header.dump() + "\n";
  for (const auto& r : logs) {
    out += json{{"uid", r.uid},
                {"class", to_string(r.profile_class)},
                {"season", r.season},
                {"match_index", r.match_index},
                {"win", r.win},
                {"income", r.income}}
               .dump();
    out += '\n';
  }
  return out;
}

std::vector<MatchRecord> match_logs_from_text(const std::string& text) {
  std::vector<MatchRecord> out;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SimError(ErrorCode::InvalidValue, std::string("match log record: ") + e.what());
    }
    if (header) {
      header = false;
      if (j.contains("format")) continue;
    }
    MatchRecord r;
    r.uid = j.at("uid").get<Uid>();
    r.profile_class = parse_class(j.at("class").get<std::string>());
    r.season = j.value("season", 1);
    r.match_index = j.at("match_index").get<int>();
    r.win = j.at("win").get<bool>();
    r.income = j.at("income").get<Currency>();
    out.push_back(r);
  }
  return out;
}

}  // namespace mmosim
