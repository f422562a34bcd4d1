#include "mmosim/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mmosim/assets.hpp"
#include "mmosim/rng.hpp"
#include "mmosim/serialize.hpp"

namespace mmosim {

using nlohmann::json;

double TrueCurves::win_probability(int n) const {
  return 1.0 / (1.0 + std::exp(-(win_w0 + win_w1 * n)));
}

double TrueCurves::median_income(int n) const { return median_a + median_b * n; }

double TrueCurves::mean_income(int n) const {
  const double p = win_probability(n);
  return median_income(n) * std::exp(0.5 * sigma * sigma) * (1.0 - p + p * lambda_win);
}

namespace {

FieldDist dist_from(const json& j, double lo, double hi) {
  if (!j.is_array() || j.size() != 2) throw SimError(ErrorCode::InvalidSpec, "field needs [mean, spread]");
  FieldDist d{j[0].get<double>(), j[1].get<double>(), lo, hi};
  if (d.spread < 0 || d.mean < lo || d.mean > hi)
    throw SimError(ErrorCode::InvalidSpec, "field mean outside bounds or negative spread");
  return d;
}

json dist_to(const FieldDist& d) { return json::array({d.mean, d.spread}); }

double draw(const FieldDist& d, RngStream& rng) {
  return std::clamp(d.mean + d.spread * rng.normal(), d.lo, d.hi);
}

}  // namespace

ClusterTable clusters_from_json(const json& j) {
  ClusterTable t;
  std::array<bool, kNumClasses> seen{};
  try {
    for (const auto& c : j.at("clusters")) {
      ClusterSpec s;
      s.profile_class = parse_class(c.at("class").get<std::string>());
      s.mix_weight = c.at("mix_weight").get<double>();
      s.skill = dist_from(c.at("skill"), 0, 1);
      s.frustration_tolerance = dist_from(c.at("frustration_tolerance"), 0, 1);
      s.spend_propensity = dist_from(c.at("spend_propensity"), 0, 1);
      s.activeness = dist_from(c.at("activeness"), 0, 1);
      s.habit_informal_trade = dist_from(c.at("habit_informal_trade"), 0, 1);
      s.session_length_mean = dist_from(c.at("session_length_mean"), 1, 48);
      const auto& w = c.at("true_win");
      s.truth.win_w0 = w.at("w0").get<double>();
      s.truth.win_w1 = w.at("w1").get<double>();
      const auto& inc = c.at("true_income");
      s.truth.median_a = inc.at("median_a").get<double>();
      s.truth.median_b = inc.at("median_b").get<double>();
      s.truth.sigma = inc.at("sigma").get<double>();
      s.truth.lambda_win = inc.at("lambda_win").get<double>();
      if (s.mix_weight < 0) throw SimError(ErrorCode::InvalidSpec, "negative mix weight");
      if (s.truth.lambda_win < 1 || s.truth.sigma < 0 || s.truth.median_a <= 0)
        throw SimError(ErrorCode::InvalidSpec, "bad true income curve");
      const auto i = index_of(s.profile_class);
      if (seen[i]) throw SimError(ErrorCode::InvalidSpec, "duplicate cluster " + std::string(to_string(s.profile_class)));
      seen[i] = true;
      t[i] = s;
    }
  } catch (const json::exception& e) {
    throw SimError(ErrorCode::InvalidSpec, e.what());
  } catch (const SimError& e) {
    if (e.code() == ErrorCode::InvalidSpec) throw;
    throw SimError(ErrorCode::InvalidSpec, e.what());
  }
  for (ProfileClass c : kAllClasses)
    if (!seen[index_of(c)]) throw SimError(ErrorCode::InvalidSpec, "missing cluster " + std::string(to_string(c)));
  double sum = 0;
  for (const auto& s : t) sum += s.mix_weight;
  if (std::abs(sum - 1.0) > 1e-9) throw SimError(ErrorCode::InvalidSpec, "mix weights must sum to 1");
  return t;
}

json clusters_to_json(const ClusterTable& t) {
  json out = json::array();
  for (const auto& s : t)
    out.push_back({{"class", to_string(s.profile_class)},
                   {"mix_weight", s.mix_weight},
                   {"skill", dist_to(s.skill)},
                   {"frustration_tolerance", dist_to(s.frustration_tolerance)},
                   {"spend_propensity", dist_to(s.spend_propensity)},
                   {"activeness", dist_to(s.activeness)},
                   {"habit_informal_trade", dist_to(s.habit_informal_trade)},
                   {"session_length_mean", dist_to(s.session_length_mean)},
                   {"true_win", {{"w0", s.truth.win_w0}, {"w1", s.truth.win_w1}}},
                   {"true_income",
                    {{"median_a", s.truth.median_a},
                     {"median_b", s.truth.median_b},
                     {"sigma", s.truth.sigma},
                     {"lambda_win", s.truth.lambda_win}}}});
  return json{{"clusters", out}};
}

const ClusterTable& default_clusters() {
  static const ClusterTable t = clusters_from_json(json::parse(asset("clusters.json")));
  return t;
}

std::array<int, kNumClasses> apportion(const ClusterTable& specs, int n) {
  std::array<int, kNumClasses> counts{};
  std::array<double, kNumClasses> rem{};
  int assigned = 0;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    const double quota = specs[i].mix_weight * n;
    // Guard against 0.3 * 500 = 149.99999999999997.
    counts[i] = static_cast<int>(std::floor(quota + 1e-9));
    rem[i] = quota - counts[i];
    assigned += counts[i];
  }
  std::array<std::size_t, kNumClasses> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % kNumClasses]];
  return counts;
}

std::vector<PlayerProfile> generate_population(const ClusterTable& specs, int n,
                                               std::uint64_t seed, Uid first_uid) {
  if (n < 1) throw SimError(ErrorCode::InvalidSpec, "population size must be >= 1");
  const auto counts = apportion(specs, n);
  std::vector<ProfileClass> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < kNumClasses; ++i) labels.insert(labels.end(), counts[i], kAllClasses[i]);
  RngStream shuffle(seed, 0xffffffffULL, StreamPurpose::Generator);
  for (std::size_t i = labels.size(); i > 1; --i)
    std::swap(labels[i - 1], labels[static_cast<std::size_t>(shuffle.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

  std::vector<PlayerProfile> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Uid uid = first_uid + static_cast<Uid>(i);
    const ClusterSpec& s = specs[index_of(labels[i])];
    RngStream rng(seed, uid, StreamPurpose::Generator);
    PlayerProfile p;
    p.uid = uid;
    p.profile_class = s.profile_class;
    p.skill = draw(s.skill, rng);
    p.frustration_tolerance = draw(s.frustration_tolerance, rng);
    p.spend_propensity = draw(s.spend_propensity, rng);
    p.activeness = draw(s.activeness, rng);
    p.habit_informal_trade = draw(s.habit_informal_trade, rng);
    p.session_length_mean = static_cast<int>(std::lround(draw(s.session_length_mean, rng)));
    p.session_length_mean = std::max(1, p.session_length_mean);
    out.push_back(p);
  }
  return out;
}

SeasonLogs generate_season_logs(const ClusterTable& specs, const SeasonOptions& o) {
  if (o.min_matches < 1 || o.max_matches > 200 || o.min_matches > o.max_matches)
    throw SimError(ErrorCode::InvalidSpec, "match range must lie within [1, 200]");
  if (o.players_per_class < 1) throw SimError(ErrorCode::InvalidSpec, "players_per_class < 1");
  SeasonLogs logs;
  for (int season = 1; season <= 2; ++season) {
    auto& out = season == 1 ? logs.train : logs.holdout;
    Uid uid = 0;
    for (const ClusterSpec& s : specs) {
      for (int k = 0; k < o.players_per_class; ++k, ++uid) {
        RngStream rng(o.seed, (static_cast<std::uint64_t>(season) << 32) | uid, StreamPurpose::Battle);
        const int matches = static_cast<int>(rng.uniform_int(o.min_matches, o.max_matches));
        for (int n = 1; n <= matches; ++n) {
          const bool win = rng.bernoulli(s.truth.win_probability(n));
          const double z = rng.normal();
          const double income =
              s.truth.median_income(n) * std::exp(s.truth.sigma * z) * (win ? s.truth.lambda_win : 1.0);
          out.push_back(MatchRecord{uid, s.profile_class, season, n, win,
                                    static_cast<Currency>(std::llround(income))});
        }
      }
    }
  }
  return logs;
}

const BattleModel& default_battle_model() {
  static const BattleModel m = [] {
    SeasonOptions o;
    o.players_per_class = 300;
    o.seed = 20250101;
    return fit(generate_season_logs(default_clusters(), o).train);
  }();
  return m;
}

std::vector<TrajectoryRecord> export_trajectories(const std::vector<Event>& log, std::int64_t day,
                                                  int steps_per_day, std::int64_t executed_steps) {
  const std::int64_t lo = day * steps_per_day, hi = lo + steps_per_day;
  if (day < 0 || executed_steps < hi)
    throw SimError(ErrorCode::StepNotReached, "log does not cover day " + std::to_string(day));
  std::vector<TrajectoryRecord> out;
  for (const auto& e : log) {
    if (e.step.abs_step < lo || e.step.abs_step >= hi) continue;
    if (const auto* a = e.as<ev::ActionChosen>())
      out.push_back(TrajectoryRecord{*e.uid, e.step.abs_step, a->context, a->action});
  }
  return out;
}

std::vector<TrajectoryRecord> export_all_trajectories(const std::vector<Event>& log) {
  std::vector<TrajectoryRecord> out;
  for (const auto& e : log)
    if (const auto* a = e.as<ev::ActionChosen>())
      out.push_back(TrajectoryRecord{*e.uid, e.step.abs_step, a->context, a->action});
  return out;
}

std::string trajectories_to_text(const std::vector<TrajectoryRecord>& corpus, const json& header) {
  std::string out = header.dump() + "\n";
  for (const auto& r : corpus) {
    out += json{{"uid", r.uid},
                {"t", r.t},
                {"action", to_string(r.action)},
                {"context", context_to_json(r.context, r.uid)}}
               .dump();
    out += '\n';
  }
  return out;
}

std::vector<TrajectoryRecord> trajectories_from_text(const std::string& text, int steps_per_day) {
  std::vector<TrajectoryRecord> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SimError(ErrorCode::InvalidValue, std::string("trajectory record: ") + e.what());
    }
    if (j.contains("format")) {
      if (j.contains("steps_per_day")) steps_per_day = j.at("steps_per_day").get<int>();
      continue;
    }
    TrajectoryRecord r;
    r.uid = j.at("uid").get<Uid>();
    r.t = j.at("t").get<std::int64_t>();
    r.action = parse_action(j.at("action").get<std::string>());
    r.context = context_from_json(j.at("context"), steps_per_day);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mmosim
