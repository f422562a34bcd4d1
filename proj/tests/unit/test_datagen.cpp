#include <cmath>
#include <numeric>
#include <set>

#include "helpers.hpp"
#include "mmosim/assets.hpp"
#include "mmosim/datagen.hpp"
#include "mmosim/engine.hpp"
#include "mmosim/serialize.hpp"

using namespace mmosim;
using testutil::code_of;
using nlohmann::json;

TEST_SUITE("datagen") {

TEST_CASE("apportionment of the default mix") {
  const auto counts = apportion(default_clusters(), 500);
  CHECK(counts == std::array<int, kNumClasses>{150, 100, 50, 150, 50});
  for (int n : {0, 1, 7, 333, 1001}) {
    const auto c = apportion(default_clusters(), n);
    CHECK(std::accumulate(c.begin(), c.end(), 0) == n);
  }
}

TEST_CASE("population generation is seeded and bounded") {
  const auto a = generate_population(default_clusters(), 500, 9);
  const auto b = generate_population(default_clusters(), 500, 9);
  const auto c = generate_population(default_clusters(), 500, 10);
  CHECK(a == b);
  CHECK(a != c);
  std::array<int, kNumClasses> per{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].uid == i);
    ++per[static_cast<std::size_t>(a[i].profile_class)];
  }
  CHECK(per == apportion(default_clusters(), 500));

  const auto big = generate_population(default_clusters(), 100000, 4, 1000);
  CHECK(big.front().uid == 1000);
  for (const auto& p : big) {
    CHECK_NOTHROW(validate(p));
    const auto& spec = default_clusters()[static_cast<std::size_t>(p.profile_class)];
    CHECK(p.skill >= spec.skill.lo);
    CHECK(p.skill <= spec.skill.hi);
    CHECK(p.activeness >= spec.activeness.lo);
    CHECK(p.activeness <= spec.activeness.hi);
    CHECK(p.session_length_mean >= spec.session_length_mean.lo);
    CHECK(p.session_length_mean <= spec.session_length_mean.hi);
  }
}

TEST_CASE("cluster table validation") {
  json doc = clusters_to_json(default_clusters());
  CHECK(clusters_to_json(clusters_from_json(doc)) == doc);
  json bad = doc;
  bad["clusters"][0]["mix_weight"] = -1;
  CHECK(code_of([&] { clusters_from_json(bad); }) == ErrorCode::InvalidSpec);
  bad = doc;
  bad["clusters"].erase(bad["clusters"].begin());
  CHECK(code_of([&] { clusters_from_json(bad); }) == ErrorCode::InvalidSpec);
}

TEST_CASE("season logs follow the truth curves") {
  SeasonOptions opt;
  opt.players_per_class = 300;
  opt.seed = 5;
  const SeasonLogs logs = generate_season_logs(default_clusters(), opt);
  std::map<Uid, int> matches;
  for (const auto& m : logs.train) {
    CHECK(m.season == 1);
    ++matches[m.uid];
  }
  CHECK(matches.size() == 300 * kNumClasses);
  for (const auto& [uid, k] : matches) {
    CHECK(k >= 35);
    CHECK(k <= 40);
  }
  for (const auto& m : logs.holdout) CHECK(m.season == 2);
  CHECK(dataset_fingerprint(logs.train) != dataset_fingerprint(logs.holdout));
  CHECK(logs.holdout.size() > 35u * 300 * kNumClasses);

  std::map<std::pair<int, int>, std::pair<int, int>> wins;  // (class, n) -> (wins, total)
  for (const auto& m : logs.train) {
    auto& w = wins[{static_cast<int>(m.profile_class), m.match_index}];
    w.first += m.win;
    ++w.second;
  }
  int cells = 0, outside = 0;
  for (const auto& [key, w] : wins) {
    if (w.second < 100) continue;
    const double p = default_clusters()[static_cast<std::size_t>(key.first)].truth.win_probability(key.second);
    const double sd = std::sqrt(p * (1 - p) / w.second);
    const double emp = static_cast<double>(w.first) / w.second;
    ++cells;
    if (std::abs(emp - p) > 3 * sd + 1e-9) ++outside;
  }
  CHECK(cells >= 35 * kNumClasses);
  CHECK(outside <= cells / 50);
  const auto again = generate_season_logs(default_clusters(), opt);
  CHECK(dataset_fingerprint(again.train) == dataset_fingerprint(logs.train));
}

TEST_CASE("trajectory export") {
  const RunConfig cfg = testutil::config({{"total_days", 3}, {"population", {{"generate", 40}}}});
  Simulation sim(cfg);
  const auto log = sim.advance(48);
  const auto day1 = export_trajectories(log, 1, 24, 48);
  REQUIRE(!day1.empty());
  std::array<std::size_t, kNumActions> from_records{}, from_events{};
  for (const auto& r : day1) {
    CHECK(r.t >= 24);
    CHECK(r.t < 48);
    ++from_records[static_cast<std::size_t>(r.action)];
  }
  for (const auto& e : log)
    if (const auto* a = e.as<ev::ActionChosen>(); a && e.step.day() == 1) ++from_events[static_cast<std::size_t>(a->action)];
  CHECK(from_records == from_events);

  const std::string text = trajectories_to_text(day1, json{{"format", "mmosim.trajectories"}});
  CHECK(trajectories_from_text(text, 24) == day1);
  CHECK(code_of([&] { export_trajectories(log, 2, 24, 48); }) == ErrorCode::StepNotReached);

  const RunConfig off = testutil::config(
      {{"total_days", 1},
       {"population", json::array({testutil::profile_json(0, "casual", 0.0), testutil::profile_json(1, "novice", 0.0)})}});
  Simulation quiet(off);
  const auto qlog = quiet.advance(24);
  CHECK(export_trajectories(qlog, 0, 24, 24).size() == 2);
  for (const auto& r : export_trajectories(qlog, 0, 24, 24)) {
    CHECK(r.action == Action::Offline);
    CHECK(r.context.state == AgentState::Offline);
  }
}

TEST_CASE("default population matches the reference in-session action mix") {
  const json ref = json::parse(asset("action_share_reference.json"));
  const RunConfig cfg = testutil::config({{"total_days", ref.at("days")}, {"population", {{"generate", ref.at("population")}}}});
  Simulation sim(cfg);
  const auto log = sim.advance(cfg.total_steps());
  std::array<double, kNumActions> counts{};
  double total = 0;
  for (const auto& r : export_all_trajectories(log)) {
    if (r.context.state == AgentState::Offline) continue;
    ++counts[index_of(r.action)];
    ++total;
  }
  REQUIRE(total > 0);
  const double tol = ref.at("tolerance").get<double>();
  for (Action a : kAllActions) {
    INFO(to_string(a));
    CHECK(std::abs(counts[index_of(a)] / total - ref.at("shares").at(std::string(to_string(a))).get<double>()) <= tol);
  }
}

}  // TEST_SUITE
