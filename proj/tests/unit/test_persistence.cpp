#include <fstream>

#include "helpers.hpp"
#include "mmosim/engine.hpp"
#include "mmosim/hash.hpp"
#include "mmosim/persistence.hpp"
#include "mmosim/runner.hpp"

using namespace mmosim;
using testutil::code_of;
using nlohmann::json;

namespace {

std::vector<Event> session_events(Seq first, Seq last, std::int64_t step) {
  std::vector<Event> out;
  for (Seq s = first; s <= last; ++s)
    out.push_back(Event{s, SimTime::from_abs(step, 24), static_cast<Uid>(s % 5), ev::SessionStart{static_cast<int>(s)}});
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_SUITE("persistence") {

TEST_CASE("appends continue the sequence; gaps are rejected") {
  const auto dir = testutil::temp_dir("log");
  const RunConfig cfg = testutil::config();
  {
    EventLogWriter w(dir / "log.jsonl", make_log_header(cfg));
    w.append(session_events(1, 10, 0));
    w.commit(1);
    w.append(session_events(11, 20, 1));
    w.commit(2);
    CHECK(w.last_seq() == 20);
    CHECK(code_of([&] { w.append(session_events(22, 23, 2)); }) == ErrorCode::SeqGap);
    CHECK(code_of([&] { w.append(session_events(20, 21, 2)); }) == ErrorCode::SeqGap);
  }
  const LogContents c = read_log(dir / "log.jsonl");
  REQUIRE(c.events.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(c.events[i].seq == i + 1);
  CHECK(c.steps_done == 2);
  CHECK(c.header.at("seed") == cfg.seed);
}

TEST_CASE("crash after partial write recovers to the committed prefix") {
  const auto dir = testutil::temp_dir("crash");
  const auto path = dir / "log.jsonl";
  {
    EventLogWriter w(path, make_log_header(testutil::config()));
    w.append(session_events(1, 4, 0));
    w.commit(1);
    w.append(session_events(5, 8, 1));
  }
  {
    std::ofstream out(path, std::ios::app);
    out << R"({"seq":9,"step":1,"ki)";
  }
  const LogContents c = read_log(path);
  CHECK(c.events.size() == 4);
  CHECK(c.steps_done == 1);
  CHECK(c.uncommitted_lines > 0);
  CHECK(recover_log(path) == 1);
  CHECK(read_log(path).uncommitted_lines == 0);
  auto w = EventLogWriter::reopen(path);
  CHECK(w->last_seq() == 4);
  w->append(session_events(5, 6, 1));
  w->commit(2);
  CHECK(read_log(path).events.size() == 6);
}

TEST_CASE("content hash ignores header and markers") {
  const auto a = testutil::temp_dir("ha"), b = testutil::temp_dir("hb");
  {
    EventLogWriter w(a / "log.jsonl", make_log_header(testutil::config()));
    w.append(session_events(1, 6, 0));
    w.commit(1);
  }
  {
    EventLogWriter w(b / "log.jsonl", make_log_header(testutil::config({{"run_id", "other"}})));
    w.append(session_events(1, 3, 0));
    w.commit(1);
    w.append(session_events(4, 6, 0));
    w.commit(2);
  }
  CHECK(log_content_hash(a / "log.jsonl") == log_content_hash(b / "log.jsonl"));
  CHECK(log_content_hash(a / "log.jsonl") == events_hash(session_events(1, 6, 0)));
}

TEST_CASE("unreadable header") {
  const auto dir = testutil::temp_dir("hdr");
  {
    std::ofstream out(dir / "log.jsonl");
    out << R"({"config_version":999,"seed":1,"steps_per_day":24})" << '\n';
  }
  CHECK(code_of([&] { read_log(dir / "log.jsonl"); }) == ErrorCode::VersionMismatch);
  {
    std::ofstream out(dir / "bad.jsonl");
    out << "garbage\n";
  }
  CHECK(code_of([&] { read_log(dir / "bad.jsonl"); }) == ErrorCode::CorruptSnapshot);
  CHECK(code_of([&] { read_log(dir / "missing.jsonl"); }) == ErrorCode::IoFailure);
}

TEST_CASE("snapshot restore continues identically") {
  const RunConfig cfg = testutil::config({{"total_days", 4}, {"population", {{"generate", 60}}}});
  Simulation a(cfg);
  a.advance(70);
  const json snap = a.snapshot();
  auto b = Simulation::restore(json::parse(snap.dump()));
  CHECK(b->current_step() == 70);
  CHECK(b->next_seq() == a.next_seq());
  const auto ea = a.advance(100);
  const auto eb = b->advance(100);
  CHECK(events_hash(ea) == events_hash(eb));
  CHECK(a.ledger().player_balances() == b->ledger().player_balances());
  CHECK(a.world() == b->world());
}

TEST_CASE("snapshot integrity and version") {
  const auto dir = testutil::temp_dir("snap");
  const RunConfig cfg = testutil::config({{"total_days", 1}, {"population", {{"generate", 10}}}});
  Simulation sim(cfg);
  sim.advance(5);
  SnapshotStore store(dir);
  const SnapshotEntry e = store.write(sim.snapshot());
  CHECK(e.step == 5);
  CHECK(e.sha256 == sha256_hex(read_file(dir / e.file)));
  CHECK(store.at_or_before(4) == std::nullopt);
  CHECK(store.at_or_before(100)->step == 5);
  CHECK(SnapshotStore(dir).entries().size() == 1);

  json snap = store.load(5);
  snap["snapshot_version"] = 999;
  CHECK(code_of([&] { Simulation::restore(snap); }) == ErrorCode::VersionMismatch);

  {
    std::string body = read_file(dir / e.file);
    body[body.size() / 2] = body[body.size() / 2] == '1' ? '2' : '1';
    std::ofstream out(dir / e.file, std::ios::binary | std::ios::trunc);
    out << body;
  }
  CHECK(code_of([&] { store.load(5); }) == ErrorCode::CorruptSnapshot);
}

TEST_CASE("queries over a run log") {
  const RunConfig cfg = testutil::config({{"total_days", 2}, {"population", {{"generate", 30}}}});
  Simulation sim(cfg);
  const auto log = sim.advance(cfg.total_steps());
  CHECK(query(log, {}).size() == log.size());
  const auto mine = query(log, EventFilter{Uid{7}, std::nullopt, std::nullopt, "action_chosen", std::nullopt});
  CHECK(!mine.empty());
  for (const auto& e : mine) {
    CHECK(e.uid == Uid{7});
    CHECK(e.as<ev::ActionChosen>() != nullptr);
  }
  CHECK(query(log, EventFilter{std::nullopt, 10, 10, std::nullopt, std::nullopt}).empty());
  const auto range = query(log, EventFilter{std::nullopt, 24, 48, std::nullopt, std::nullopt});
  for (const auto& e : range) CHECK((e.step.abs_step >= 24 && e.step.abs_step < 48));
  const auto tail = query(log, EventFilter{std::nullopt, std::nullopt, std::nullopt, std::nullopt, Seq{50}});
  CHECK(tail.size() == log.size() - 49);
}

TEST_CASE("run status machine") {
  using S = RunStatus;
  CHECK_NOTHROW(check_status_transition(S::Created, S::Running));
  CHECK_NOTHROW(check_status_transition(S::Running, S::Paused));
  CHECK_NOTHROW(check_status_transition(S::Paused, S::Running));
  CHECK_NOTHROW(check_status_transition(S::Running, S::Finished));
  CHECK_NOTHROW(check_status_transition(S::Running, S::Failed));
  CHECK(code_of([] { check_status_transition(S::Finished, S::Running); }) == ErrorCode::IllegalTransition);
  CHECK(code_of([] { check_status_transition(S::Failed, S::Paused); }) == ErrorCode::IllegalTransition);
  CHECK(code_of([] { check_status_transition(S::Paused, S::Created); }) == ErrorCode::IllegalTransition);
  for (S s : {S::Created, S::Running, S::Paused, S::Finished, S::Failed}) CHECK(parse_run_status(to_string(s)) == s);
}

TEST_CASE("driver writes record, log and snapshots") {
  const auto dir = testutil::temp_dir("drv");
  const RunConfig cfg = testutil::config({{"total_days", 3}, {"population", {{"generate", 20}}}});
  auto d = RunDriver::create(cfg, dir);
  d->set_status(RunStatus::Running);
  d->advance(30);
  const RunRecord rec = load_run_record(dir);
  CHECK(rec.status == RunStatus::Running);
  CHECK(rec.run_id == cfg.run_id);
  CHECK(RunRecord::from_json(rec.to_json()).to_json() == rec.to_json());
  CHECK(d->snapshots().entries().size() == 2);  // steps 0 and 24
  CHECK(read_log(d->log_path()).steps_done == 30);

  const auto snap24 = dir / "snapshots" / d->snapshots().at_or_before(24)->file;
  d->run_to_end();
  const std::string full = log_content_hash(d->log_path());
  d.reset();
  auto r = RunDriver::resume(snap24);
  CHECK(r->sim().current_step() == 24);
  r->run_to_end();
  CHECK(log_content_hash(r->log_path()) == full);
}

}  // TEST_SUITE
