#include <numeric>

#include "helpers.hpp"
#include "httplib.h"
#include "mmosim/api.hpp"
#include "mmosim/serialize.hpp"

using namespace mmosim;
using testutil::code_of;
using nlohmann::json;

namespace {

using Cmd = RunControlCommand;

Cmd cmd(Cmd::Kind k, std::int64_t n = 1) { return Cmd{k, n}; }

json small_run(const std::string& id, int days = 2, int n = 30) {
  return testutil::config_doc({{"run_id", id}, {"total_days", days}, {"population", {{"generate", n}}}, {"time_acceleration", 0.005}});
}

}  // namespace

TEST_SUITE("api") {

TEST_CASE("control commands parse") {
  CHECK(Cmd::from_json({{"command", "step"}, {"n", 5}}).kind == Cmd::Kind::StepN);
  CHECK(Cmd::from_json({{"command", "step"}, {"n", 5}}).n == 5);
  CHECK(Cmd::from_json({{"command", "pause"}}).kind == Cmd::Kind::Pause);
  CHECK(code_of([] { Cmd::from_json({{"command", "explode"}}); }) == ErrorCode::InvalidValue);
  CHECK(code_of([] { Cmd::from_json({{"command", "step"}, {"n", 0}}); }) == ErrorCode::InvalidValue);
}

TEST_CASE("status codes") {
  CHECK(http_status(ErrorCode::UnknownRun) == 404);
  CHECK(http_status(ErrorCode::IllegalTransition) == 409);
  CHECK(http_status(ErrorCode::StepNotReached) == 409);
  CHECK(http_status(ErrorCode::PastStep) == 400);
  CHECK(http_status(ErrorCode::IoFailure) == 500);
}

TEST_CASE("run lifecycle and queries") {
  RunManager mgr(testutil::temp_dir("api"));
  const std::string id = mgr.create(small_run("life"));
  CHECK(id == "life");
  CHECK(mgr.create(small_run("life")) == "life-2");
  CHECK(code_of([&] { mgr.create(small_run("bad id!")); }) == ErrorCode::InvalidConfig);
  CHECK(mgr.status(id) == RunStatus::Created);
  CHECK(code_of([&] { mgr.status("nope"); }) == ErrorCode::UnknownRun);

  const json s0 = mgr.stats(id, 0, std::nullopt);
  CHECK(s0.at("money_supply").at("players_total") == 30 * 1000);
  CHECK(code_of([&] { mgr.stats(id, 5, std::nullopt); }) == ErrorCode::StepNotReached);
  CHECK(code_of([&] { mgr.control(id, cmd(Cmd::Kind::StepN, 3)); }) == ErrorCode::IllegalTransition);
  CHECK(code_of([&] { mgr.control(id, cmd(Cmd::Kind::Pause)); }) == ErrorCode::IllegalTransition);

  CHECK(mgr.control(id, cmd(Cmd::Kind::Start)) == RunStatus::Running);
  CHECK(mgr.control(id, cmd(Cmd::Kind::Pause)) == RunStatus::Paused);
  const auto done = mgr.steps_done(id);
  CHECK(mgr.control(id, cmd(Cmd::Kind::StepN, 2)) == RunStatus::Paused);
  CHECK(mgr.steps_done(id) == done + 2);

  const std::int64_t at = mgr.steps_done(id);
  CHECK(code_of([&] {
          mgr.intervene(id, {{"at_step", 0}, {"kind", "set_param"}, {"path", "tax_rate"}, {"value", 0.1}});
        }) == ErrorCode::PastStep);
  const auto iid = mgr.intervene(id, {{"kind", "enable_feature"}, {"name", "black_market_enabled"}});
  CHECK(mgr.timeline(id).at("interventions").at(0).at("at_step") == at);

  for (std::int64_t t : {std::int64_t{0}, at / 2, at}) {
    const json all = mgr.agents_by_state(id, std::nullopt, t);
    int sum = 0;
    for (const auto& [k, v] : all.at("counts").items()) sum += v.get<int>();
    CHECK(sum == 30);
    CHECK(all.at("agents").size() == 30);
    int filtered = 0;
    for (AgentState s : kAllStates)
      filtered += static_cast<int>(mgr.agents_by_state(id, s, t).at("agents").size());
    CHECK(filtered == 30);
  }
  const json agent = mgr.agent_detail(id, 3, std::nullopt);
  CHECK(agent.at("uid") == 3);
  CHECK(code_of([&] { mgr.agent_detail(id, 999, std::nullopt); }) == ErrorCode::UnknownRecipient);

  CHECK(mgr.control(id, cmd(Cmd::Kind::Resume)) == RunStatus::Running);
  mgr.wait(id);
  CHECK(mgr.status(id) == RunStatus::Finished);
  CHECK(mgr.steps_done(id) == 48);
  const json tl = mgr.timeline(id);
  CHECK(tl.at("interventions").at(0).at("intervention_id") == iid);
  CHECK(tl.at("interventions").at(0).at("applied") == true);
  CHECK(code_of([&] { mgr.control(id, cmd(Cmd::Kind::Resume)); }) == ErrorCode::IllegalTransition);
  CHECK(code_of([&] {
          mgr.intervene(id, {{"kind", "enable_feature"}, {"name", "black_market_enabled"}});
        }) != std::nullopt);
}

TEST_CASE("answers survive a restart") {
  const auto root = testutil::temp_dir("restart");
  json stats_a, agents_a, detail_a;
  std::vector<Event> events_a;
  {
    RunManager mgr(root);
    const auto id = mgr.create(small_run("keep", 1, 20));
    mgr.control(id, cmd(Cmd::Kind::Start));
    mgr.wait(id);
    stats_a = mgr.stats(id, 12, 6);
    agents_a = mgr.agents_by_state(id, std::nullopt, 20);
    detail_a = mgr.agent_detail(id, 4, 18);
    events_a = mgr.events(id, 1, 1'000'000);
  }
  RunManager mgr(root);
  const auto id = mgr.open(root / "keep");
  CHECK(id == "keep");
  CHECK(mgr.status(id) == RunStatus::Finished);
  CHECK(mgr.stats(id, 12, 6) == stats_a);
  CHECK(mgr.agents_by_state(id, std::nullopt, 20) == agents_a);
  CHECK(mgr.agent_detail(id, 4, 18) == detail_a);
  CHECK(mgr.events(id, 1, 1'000'000) == events_a);
}

TEST_CASE("paused runs reopen paused") {
  const auto root = testutil::temp_dir("reopen");
  {
    RunManager mgr(root);
    const auto id = mgr.create(small_run("half", 2, 10));
    mgr.control(id, cmd(Cmd::Kind::Start));
    mgr.control(id, cmd(Cmd::Kind::Pause));
    mgr.control(id, cmd(Cmd::Kind::Stop));
  }
  {
    RunManager mgr(root);
    const auto id = mgr.create(small_run("unfinished", 2, 10));
    mgr.control(id, cmd(Cmd::Kind::Start));
    mgr.control(id, cmd(Cmd::Kind::Pause));
  }
  RunManager mgr(root);
  const auto id = mgr.open(root / "unfinished");
  CHECK(mgr.status(id) == RunStatus::Paused);
  mgr.control(id, cmd(Cmd::Kind::Resume));
  mgr.wait(id);
  CHECK(mgr.steps_done(id) == 48);
  CHECK(mgr.status(mgr.open(root / "half")) == RunStatus::Finished);
}

TEST_CASE("http surface") {
  RunManager mgr(testutil::temp_dir("http"));
  ApiServer server(mgr);
  const int port = server.start("127.0.0.1", 0);
  httplib::Client cli("127.0.0.1", port);

  auto root = cli.Get("/");
  REQUIRE(root);
  CHECK(root->status == 200);

  auto created = cli.Post("/runs", small_run("web", 1, 15).dump(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  CHECK(json::parse(created->body).at("run_id") == "web");

  auto missing = cli.Get("/runs/zzz");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  const json err = json::parse(missing->body);
  CHECK(err.at("error") == "UnknownRun");
  CHECK(err.at("schema_version") == kApiSchemaVersion);

  auto early = cli.Get("/runs/web/stats?step=3");
  REQUIRE(early);
  CHECK(early->status == 409);
  auto badq = cli.Get("/runs/web/agents?step=abc");
  REQUIRE(badq);
  CHECK(badq->status == 400);

  auto start = cli.Post("/runs/web/control", R"({"command":"start"})", "application/json");
  REQUIRE(start);
  CHECK(start->status == 200);

  std::string streamed;
  auto follow = cli.Get("/runs/web/events?follow=1", [&](const char* data, std::size_t n) {
    streamed.append(data, n);
    return true;
  });
  REQUIRE(follow);
  CHECK(follow->status == 200);
  mgr.wait("web");
  std::vector<Seq> seqs;
  std::size_t pos = 0;
  while (pos < streamed.size()) {
    const auto nl = streamed.find('\n', pos);
    REQUIRE(nl != std::string::npos);
    seqs.push_back(json::parse(streamed.substr(pos, nl - pos)).at("seq").get<Seq>());
    pos = nl + 1;
  }
  const auto all = mgr.events("web", 1, 10'000'000);
  REQUIRE(seqs.size() == all.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) CHECK(seqs[i] == i + 1);

  auto page = cli.Get("/runs/web/events?from_seq=5&limit=3");
  REQUIRE(page);
  const json pj = json::parse(page->body);
  CHECK(pj.at("events").size() == 3);
  CHECK(pj.at("next_seq") == 8);

  auto tl = cli.Get("/runs/web/timeline");
  REQUIRE(tl);
  CHECK(json::parse(tl->body).at("current_step") == 24);
  auto again = cli.Post("/runs/web/control", R"({"command":"resume"})", "application/json");
  REQUIRE(again);
  CHECK(again->status == 409);
  server.stop();
}

}  // TEST_SUITE
