#include <atomic>
#include <set>
#include <thread>

#include "helpers.hpp"
#include "mmosim/engine.hpp"
#include "mmosim/serialize.hpp"

using namespace mmosim;
using testutil::code_of;
using nlohmann::json;

namespace {

std::vector<std::string> lines(const std::vector<Event>& events) {
  std::vector<std::string> out;
  for (const auto& e : events) out.push_back(event_to_line(e));
  return out;
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("map_time examples") {
  RunConfig cfg = testutil::config({{"time_acceleration", 1.0}});
  CHECK(map_time(0, cfg) == SimTime::from_day(0, 0, 24));
  const SimTime t = map_time(25, cfg);
  CHECK(t.day() == 1);
  CHECK(t.step_in_day() == 1);
  cfg.time_acceleration = 0.5;
  CHECK(map_time(10, cfg).abs_step == 20);
  CHECK(map_time(1e9, cfg).abs_step == cfg.total_steps() - 1);
  cfg.time_acceleration = 0;
  CHECK(code_of([&] { map_time(1, cfg); }) == ErrorCode::InvalidValue);
}

TEST_CASE("single always-offline agent over one day") {
  const RunConfig cfg = testutil::config({{"total_days", 1},
                                          {"population", json::array({testutil::profile_json(0, "casual", 1.0)})},
                                          {"policy_binding", {{"default", "fixed:offline"}}}});
  Simulation sim(cfg);
  const auto events = sim.advance(cfg.steps_per_day);
  int starts = 0, battles = 0;
  for (const auto& e : events) {
    starts += e.as<ev::SessionStart>() != nullptr;
    battles += e.as<ev::BattleResolved>() != nullptr;
  }
  CHECK(starts == 1);
  CHECK(battles == 0);
  CHECK(sim.agent(0).state == AgentState::Offline);
  CHECK(sim.finished());
  CHECK(code_of([&] { sim.advance(1); }) == ErrorCode::RunFinished);
}

TEST_CASE("advance chunking does not change the log") {
  const RunConfig cfg = testutil::config({{"total_days", 2}, {"population", {{"generate", 100}}}});
  Simulation a(cfg), b(cfg);
  auto ea = a.advance(30);
  auto rest = a.advance(cfg.total_steps() - 30);
  ea.insert(ea.end(), rest.begin(), rest.end());
  const auto eb = b.advance(cfg.total_steps());
  CHECK(lines(ea) == lines(eb));
}

TEST_CASE("battle settlement precedes the agent's next decision") {
  const RunConfig cfg = testutil::config({{"total_days", 1},
                                          {"population", json::array({testutil::profile_json(0, "high_skill", 1.0)})},
                                          {"policy_binding", {{"default", "fixed:battle"}}}});
  Simulation sim(cfg);
  const auto events = sim.advance(8);
  int resolved = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!events[i].as<ev::BattleResolved>()) continue;
    ++resolved;
    const auto step = events[i].step.abs_step;
    REQUIRE(i + 1 < events.size());
    const auto* back = events[i + 1].as<ev::StateTransition>();
    REQUIRE(back != nullptr);
    CHECK(back->from == AgentState::Battle);
    CHECK(back->to == AgentState::Online);
    for (std::size_t j = 0; j < i; ++j)
      if (events[j].step.abs_step == step) CHECK(events[j].as<ev::ActionChosen>() == nullptr);
  }
  CHECK(resolved > 0);
}

TEST_CASE("per-step invariants on the default population") {
  const RunConfig cfg = testutil::config({{"total_days", 2}, {"tax_rate", 0.1},
                                          {"feature_flags", {{"black_market_enabled", true}}}});
  Simulation sim(cfg);
  const Currency total = sim.ledger().initial_total();
  std::map<std::pair<Uid, std::int64_t>, int> decisions;
  Seq expect = 1;
  while (!sim.finished()) {
    for (const auto& e : sim.advance(1)) {
      REQUIRE(e.seq == expect++);
      if (const auto* t = e.as<ev::StateTransition>()) REQUIRE(is_legal_transition(t->from, t->to));
      if (const auto* a = e.as<ev::ActionChosen>()) {
        ++decisions[{*e.uid, e.step.day()}];
        if (a->context.state != AgentState::Offline) {
          REQUIRE((a->context.state == AgentState::Online || a->context.state == AgentState::Market));
          REQUIRE(valid_actions(a->context)[index_of(a->action)]);
        } else {
          REQUIRE(a->action == Action::Offline);
        }
      }
    }
    REQUIRE(sim.ledger().players_total() + sim.ledger().reserve() + sim.ledger().burn() == total);
    for (const auto& [uid, a] : sim.agents()) {
      REQUIRE((a.state == AgentState::Battle) == a.pending_task.has_value());
      REQUIRE(a.history.size() <= static_cast<std::size_t>(cfg.history_k));
    }
  }
  for (const auto& p : cfg.population)
    for (std::int64_t d = 0; d < cfg.total_days; ++d) CHECK(decisions[{p.uid, d}] >= 1);
}

TEST_CASE("multi-worker planning matches single-worker exactly") {
  const RunConfig one = testutil::config({{"total_days", 1}, {"population", {{"generate", 200}}}});
  const RunConfig four = testutil::config({{"total_days", 1}, {"population", {{"generate", 200}}}, {"workers", 4}});
  Simulation a(one), b(four);
  const auto ea = a.advance(one.total_steps()), eb = b.advance(four.total_steps());
  REQUIRE(ea.size() == eb.size());
  std::map<std::int64_t, std::multiset<std::string>> sa, sb;
  for (auto e : ea) {
    e.seq = 0;
    sa[e.step.abs_step].insert(event_to_line(e));
  }
  for (auto e : eb) {
    e.seq = 0;
    sb[e.step.abs_step].insert(event_to_line(e));
  }
  CHECK(sa == sb);
  CHECK(ea == eb);
}

TEST_CASE("population size does not perturb an agent's draws") {
  json small = json::array(), big = json::array();
  for (Uid u = 0; u < 5; ++u) small.push_back(testutil::profile_json(u, "novice", 0.7));
  big = small;
  for (Uid u = 5; u < 40; ++u) big.push_back(testutil::profile_json(u, "novice", 0.7));
  // Trades couple agents; with channels closed each agent evolves alone.
  const json flags = {{"black_market_enabled", false}, {"informal_trade_enabled", false}, {"npc_shop_enabled", false}};
  Simulation a(testutil::config({{"total_days", 2}, {"population", small}, {"feature_flags", flags}}));
  Simulation b(testutil::config({{"total_days", 2}, {"population", big}, {"feature_flags", flags}}));
  auto pick = [](const std::vector<Event>& evs, Uid uid) {
    std::vector<std::string> out;
    for (auto e : evs)
      if (e.uid == uid) {
        e.seq = 0;
        out.push_back(event_to_line(e));
      }
    return out;
  };
  const auto ea = a.advance(48), eb = b.advance(48);
  for (Uid u = 0; u < 5; ++u) CHECK(pick(ea, u) == pick(eb, u));
}

TEST_CASE("outbound pool: cap 1 serializes acquirers") {
  OutboundPool pool(1);
  auto first = pool.acquire();
  std::atomic<bool> second_in{false};
  std::thread t([&] {
    auto l = pool.acquire();
    second_in = true;
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  CHECK_FALSE(second_in.load());
  first.release();
  t.join();
  CHECK(second_in.load());
  CHECK(pool.max_in_flight() == 1);
}

TEST_CASE("outbound pool: bounded under contention and closed on shutdown") {
  OutboundPool pool(8);
  std::vector<std::thread> ts;
  for (int i = 0; i < 32; ++i)
    ts.emplace_back([&] {
      for (int k = 0; k < 50; ++k) {
        auto l = pool.acquire();
        std::this_thread::yield();
      }
    });
  for (auto& t : ts) t.join();
  CHECK(pool.max_in_flight() <= 8);
  CHECK(pool.total_acquired() == 32 * 50);
  pool.close();
  CHECK(code_of([&] { pool.acquire(); }) == ErrorCode::PoolClosed);
}

TEST_CASE("outbound pool: waiters are released with PoolClosed") {
  OutboundPool pool(1);
  auto held = pool.acquire();
  std::optional<ErrorCode> got;
  std::thread t([&] { got = code_of([&] { pool.acquire(); }); });
  std::this_thread::sleep_for(std::chrono::milliseconds(30));
  pool.close();
  t.join();
  CHECK(got == ErrorCode::PoolClosed);
}

TEST_CASE("context reflects channels and session state") {
  const RunConfig cfg = testutil::config({{"total_days", 1}, {"population", {{"generate", 30}}}});
  Simulation sim(cfg);
  sim.advance(1);
  for (const auto& [uid, a] : sim.agents()) {
    const PolicyContext ctx = sim.context_for(uid);
    CHECK(ctx.channels == sim.world().channels);
    CHECK(ctx.balance == sim.ledger().player_balance(uid));
    CHECK(ctx.state == a.state);
    CHECK(ctx.recent_actions.size() <= static_cast<std::size_t>(cfg.context_k));
  }
}

}  // TEST_SUITE
