#include <numeric>

#include "helpers.hpp"
#include "mmosim/analytics.hpp"
#include "mmosim/datagen.hpp"
#include "mmosim/engine.hpp"
#include "mmosim/persistence.hpp"
#include "mmosim/runner.hpp"

using namespace mmosim;
using testutil::code_of;
using nlohmann::json;

namespace {

TrajectoryRecord rec(Uid uid, std::int64_t t, Action a) {
  TrajectoryRecord r;
  r.uid = uid;
  r.t = t;
  r.action = a;
  r.context.profile.uid = uid;
  r.context.state = AgentState::Online;
  r.context.time = SimTime::from_abs(t, 24);
  return r;
}

std::vector<Prediction> as_predictions(const std::vector<TrajectoryRecord>& corpus) {
  std::vector<Prediction> out;
  for (const auto& r : corpus) out.push_back({r.uid, r.t, r.action});
  return out;
}

}  // namespace

TEST_SUITE("analytics") {

TEST_CASE("gini oracles") {
  CHECK(gini({100, 100, 100, 100}) == doctest::Approx(0.0));
  CHECK(gini({0, 0, 0, 400}) == doctest::Approx(0.75));
  CHECK(gini({0, 0, 0}) == 0.0);
  CHECK(gini({}) == 0.0);
  std::mt19937_64 g(3);
  for (int i = 0; i < 200; ++i) {
    std::vector<Currency> v(1 + g() % 50);
    for (auto& x : v) x = static_cast<Currency>(g() % 10000);
    const double x = gini(v);
    CHECK(x >= 0.0);
    CHECK(x <= 1.0 - 1.0 / static_cast<double>(v.size()) + 1e-12);
  }
}

TEST_CASE("wealth bins") {
  CHECK(wealth_bin(0) == 0);
  CHECK(wealth_bin(1) == 1);
  CHECK(wealth_bin(3) == 2);
  CHECK(wealth_bin(1024) == 11);
  CHECK(wealth_bin(Currency{1} << 20) == kWealthBins - 1);
  CHECK(wealth_bin(Currency{1} << 40) == kWealthBins - 1);
  const auto edges = wealth_bin_edges();
  for (std::size_t i = 1; i < kWealthBins; ++i) CHECK(wealth_bin(edges[i]) == i);
}

TEST_CASE("accuracy oracles") {
  std::vector<TrajectoryRecord> truth;
  const Action seq[] = {Action::Battle, Action::Battle, Action::Buy, Action::Offline, Action::Battle, Action::Sell};
  for (int i = 0; i < 6; ++i) truth.push_back(rec(static_cast<Uid>(i % 2), i, seq[i]));

  CHECK(stepwise_accuracy(as_predictions(truth), truth).accuracy == 1.0);

  std::vector<Prediction> constant;
  for (const auto& r : truth) constant.push_back({r.uid, r.t, Action::Battle});
  const auto rep = stepwise_accuracy(constant, truth);
  CHECK(rep.accuracy == doctest::Approx(3.0 / 6.0));
  for (std::size_t a = 0; a < kNumActions; ++a) {
    const auto row = std::accumulate(rep.confusion[a].begin(), rep.confusion[a].end(), std::size_t{0});
    CHECK(row == rep.class_distribution[a]);
  }
  const auto maj = stepwise_accuracy(majority_predictions(truth), truth);
  CHECK(maj.accuracy == doctest::Approx(3.0 / 6.0));

  std::vector<TrajectoryRecord> four(truth.begin(), truth.begin() + 4);
  auto p = as_predictions(four);
  p[2].action = Action::Sell;
  CHECK(stepwise_accuracy(p, four).accuracy == doctest::Approx(0.75));

  auto missing = as_predictions(truth);
  missing.pop_back();
  const auto partial = stepwise_accuracy(missing, truth);
  CHECK(partial.total == truth.size());
  CHECK(partial.accuracy == doctest::Approx(5.0 / 6.0));
  auto dup = as_predictions(truth);
  dup.push_back(dup.front());
  CHECK(code_of([&] { stepwise_accuracy(dup, truth); }) == ErrorCode::DuplicatePrediction);
  CHECK(code_of([&] { stepwise_accuracy({{99, 0, Action::Battle}}, truth); }) == ErrorCode::MissingTruth);

  CHECK(predictions_from_text(predictions_to_text(p)).size() == p.size());
}

TEST_CASE("intervention report edge cases") {
  const RunConfig cfg = testutil::config({{"total_days", 2},
                                          {"population", {{"generate", 20}}},
                                          {"policy_binding", {{"default", "fixed:battle"}}}});
  Simulation sim(cfg);
  sim.schedule(Intervention{1, 24, InterventionKind::SetParam, "tax_rate", 0.1, "", false});
  const auto log = sim.advance(cfg.total_steps());
  const auto rep = intervention_report(log, 1, 12, 0, 24, cfg.total_steps());
  CHECK(rep.pre.informal_share() == std::nullopt);
  CHECK(rep.post.informal_share() == std::nullopt);
  CHECK(rep.to_json().at("pre_share").is_null());
  CHECK(code_of([&] { intervention_report(log, 2, 12, 0, 24, cfg.total_steps()); }) == ErrorCode::NotApplied);
}

TEST_CASE("disabling then re-enabling informal trade") {
  const RunConfig cfg = testutil::config({{"total_days", 6}, {"population", {{"generate", 200}}}});
  Simulation sim(cfg);
  sim.schedule(Intervention{1, 48, InterventionKind::DisableFeature, "informal_trade_enabled", 0, "", false});
  sim.schedule(Intervention{2, 96, InterventionKind::EnableFeature, "informal_trade_enabled", 0, "", false});
  const auto log = sim.advance(cfg.total_steps());
  const auto off = intervention_report(log, 1, 24, 0, 24, cfg.total_steps());
  CHECK(off.post.informal == 0);
  CHECK(off.pre.informal > 0);
  REQUIRE(off.post.informal_share().has_value());
  CHECK(*off.post.informal_share() == 0.0);
  const auto on = intervention_report(log, 2, 24, 24, 24, cfg.total_steps());
  CHECK(on.post.informal > 0);
}

TEST_CASE("frames are recomputable and consistent") {
  const auto dir = testutil::temp_dir("frames");
  const RunConfig cfg = testutil::config({{"total_days", 3}, {"population", {{"generate", 100}}}});
  auto d = RunDriver::create(cfg, dir);
  std::vector<Event> live;
  std::vector<std::pair<std::int64_t, Currency>> balances_at;
  d->set_observer([&](const std::vector<Event>& evs, std::int64_t) { live.insert(live.end(), evs.begin(), evs.end()); });
  d->run_to_end();
  const LogContents stored = read_log(d->log_path());
  REQUIRE(stored.events == live);
  for (std::int64_t t : {0, 1, 30, 48, 71, 72}) {
    const auto a = compute_frame(cfg, live, cfg.total_steps(), t, 24);
    const auto b = compute_frame(cfg, stored.events, stored.steps_done, t, 24);
    CHECK(a.to_json() == b.to_json());
    CHECK(a.players_total + a.reserve + a.burn == a.total);
    const int agents = std::accumulate(a.agents_by_state.begin(), a.agents_by_state.end(), 0);
    CHECK(agents == 100);
    const int hist = std::accumulate(a.wealth_histogram.begin(), a.wealth_histogram.end(), 0);
    CHECK(hist == 100);
    if (a.action_shares) {
      const double s = std::accumulate(a.action_shares->begin(), a.action_shares->end(), 0.0);
      CHECK(s == doctest::Approx(1.0));
    }
  }
  const auto f0 = compute_frame(cfg, live, cfg.total_steps(), 0, 24);
  CHECK(f0.players_total == 100 * cfg.initial_balance);
  CHECK(f0.agents_by_state[static_cast<std::size_t>(AgentState::Offline)] == 100);
  CHECK(code_of([&] { compute_frame(cfg, live, cfg.total_steps(), cfg.total_steps() + 1, 24); }) ==
        ErrorCode::StepNotReached);
  const auto end = compute_frame(cfg, live, cfg.total_steps(), cfg.total_steps(), 24);
  CHECK(end.players_total == d->sim().ledger().players_total());
  CHECK(end.burn == d->sim().ledger().burn());

  const auto days = daily_frames(cfg, live, cfg.total_steps(), 24);
  REQUIRE(days.size() == 4);
  for (std::size_t i = 0; i < days.size(); ++i)
    CHECK(days[i].to_json() == compute_frame(cfg, live, cfg.total_steps(), static_cast<std::int64_t>(i) * 24, 24).to_json());
}

TEST_CASE("replay policy reproduces a corpus exactly") {
  const RunConfig cfg = testutil::config({{"total_days", 2}, {"population", {{"generate", 50}}}});
  Simulation sim(cfg);
  const auto log = sim.advance(cfg.total_steps());
  const auto corpus = export_trajectories(log, 1, 24, cfg.total_steps());
  REQUIRE(!corpus.empty());
  ReplayPolicy replay(corpus);
  CHECK(stepwise_accuracy(predict_corpus(replay, corpus, 1), corpus).accuracy == 1.0);
  HeuristicPolicy h;
  const auto rep = stepwise_accuracy(predict_corpus(h, corpus, 1), corpus);
  CHECK(rep.accuracy < 1.0);
  CHECK(rep.total == corpus.size());
}

}  // TEST_SUITE
