#include "mmosim/api.hpp"

#include <algorithm>
#include <atomic>
#include <regex>

#include "mmosim/analytics.hpp"
#include "mmosim/serialize.hpp"

namespace mmosim {

using nlohmann::json;

RunControlCommand RunControlCommand::from_json(const json& j) {
  if (!j.is_object() || !j.contains("command") || !j["command"].is_string())
    throw SimError(ErrorCode::InvalidValue, "control body needs a string 'command'");
  const auto c = j["command"].get<std::string>();
  RunControlCommand cmd;
  if (c == "start") cmd.kind = Kind::Start;
  else if (c == "pause") cmd.kind = Kind::Pause;
  else if (c == "resume") cmd.kind = Kind::Resume;
  else if (c == "stop") cmd.kind = Kind::Stop;
  else if (c == "step") {
    cmd.kind = Kind::StepN;
    cmd.n = j.value("n", std::int64_t{1});
    if (cmd.n < 1) throw SimError(ErrorCode::InvalidValue, "step n must be >= 1");
  } else {
    throw SimError(ErrorCode::InvalidValue, "unknown command '" + c + "'");
  }
  return cmd;
}

struct RunManager::Run {
  std::string id;
  fs::path dir;
  RunConfig cfg;
  std::unique_ptr<RunDriver> driver;  // null for runs that ended before being opened

  std::mutex step_mu;
  std::jthread worker;

  mutable std::mutex data_mu;
  mutable std::condition_variable data_cv;
  std::vector<Event> events;
  std::int64_t steps_done = 0;
  std::vector<std::int64_t> snapshot_steps;
  std::map<InterventionId, Intervention> interventions;
  RunStatus status = RunStatus::Created;
  std::string failure;

  bool live() const {
    return driver && (status == RunStatus::Created || status == RunStatus::Running || status == RunStatus::Paused);
  }

  // Callers hold step_mu.
  void sync_status() {
    std::lock_guard lk(data_mu);
    status = driver->record().status;
    for (const auto& iv : driver->sim().timeline().all()) interventions[iv.intervention_id] = iv;
    data_cv.notify_all();
  }

  void attach() {
    driver->set_observer([this](const std::vector<Event>& evs, std::int64_t step) {
      std::lock_guard lk(data_mu);
      events.insert(events.end(), evs.begin(), evs.end());
      steps_done = step + 1;
      snapshot_steps.clear();
      for (const auto& e : driver->snapshots().entries()) snapshot_steps.push_back(e.step);
      data_cv.notify_all();
    });
  }
};

RunManager::RunManager(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

RunManager::~RunManager() {
  std::lock_guard lk(mu_);
  for (auto& [id, r] : runs_) {
    if (r->worker.joinable()) {
      r->worker.request_stop();
      r->worker.join();
    }
  }
}

RunManager::Run& RunManager::get(const std::string& id) const {
  std::lock_guard lk(mu_);
  auto it = runs_.find(id);
  if (it == runs_.end()) throw SimError(ErrorCode::UnknownRun, id);
  return *it->second;
}

std::string RunManager::adopt(std::unique_ptr<Run> r) {
  std::lock_guard lk(mu_);
  const std::string id = r->id;
  runs_.emplace(id, std::move(r));
  return id;
}

std::string RunManager::create(const json& config_doc) {
  if (!config_doc.is_object()) throw SimError(ErrorCode::InvalidConfig, "config must be an object");
  json doc = config_doc;
  const std::string base = doc.value("run_id", std::string("run"));
  static const std::regex safe("[A-Za-z0-9_.-]{1,64}");
  if (!std::regex_match(base, safe) || base == "." || base == "..")
    throw SimError(ErrorCode::InvalidConfig, "run_id must match [A-Za-z0-9_.-]{1,64}");
  std::string id = base;
  {
    std::lock_guard lk(mu_);
    for (int k = 2; runs_.contains(id) || fs::exists(root_ / id); ++k) id = base + "-" + std::to_string(k);
  }
  doc["run_id"] = id;
  RunConfig cfg = load_config(doc);
  auto r = std::make_unique<Run>();
  r->id = id;
  r->dir = root_ / id;
  r->cfg = cfg;
  r->driver = RunDriver::create(std::move(cfg), r->dir);
  r->snapshot_steps = {0};
  for (const auto& iv : r->driver->sim().timeline().all()) r->interventions[iv.intervention_id] = iv;
  r->attach();
  return adopt(std::move(r));
}

std::string RunManager::open(const fs::path& run_dir) {
  const RunRecord rec = load_run_record(run_dir);
  const std::string id = run_dir.filename().string().empty() ? rec.run_id
                                                              : fs::absolute(run_dir).lexically_normal().filename().string();
  {
    std::lock_guard lk(mu_);
    if (runs_.contains(id)) return id;
  }
  auto r = std::make_unique<Run>();
  r->id = id;
  r->dir = run_dir;
  if (rec.status == RunStatus::Finished || rec.status == RunStatus::Failed) {
    r->cfg = load_config(rec.config);
    r->status = rec.status;
    for (const auto& e : rec.snapshots) r->snapshot_steps.push_back(e.step);
  } else {
    SnapshotStore store(run_dir / "snapshots");
    if (store.entries().empty()) throw SimError(ErrorCode::CorruptSnapshot, "run has no snapshots");
    r->driver = RunDriver::resume(run_dir / "snapshots" / store.entries().back().file, run_dir);
    r->cfg = r->driver->sim().config();
    r->status = r->driver->record().status;
    for (const auto& e : r->driver->snapshots().entries()) r->snapshot_steps.push_back(e.step);
    for (const auto& iv : r->driver->sim().timeline().all()) r->interventions[iv.intervention_id] = iv;
    r->attach();
  }
  LogContents log = read_log(run_dir / "log.jsonl");
  r->events = std::move(log.events);
  r->steps_done = log.steps_done;
  for (const auto& iv : r->cfg.interventions) r->interventions.try_emplace(iv.intervention_id, iv);
  for (const auto& e : r->events)
    if (const auto* a = e.as<ev::InterventionApplied>()) r->interventions[a->intervention.intervention_id] = a->intervention;
  return adopt(std::move(r));
}

std::vector<std::string> RunManager::run_ids() const {
  std::lock_guard lk(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, r] : runs_) ids.push_back(id);
  return ids;
}

RunStatus RunManager::status(const std::string& id) const {
  Run& r = get(id);
  std::lock_guard lk(r.data_mu);
  return r.status;
}

json RunManager::record(const std::string& id) const {
  Run& r = get(id);
  std::lock_guard lk(r.data_mu);
  json j{{"schema_version", kApiSchemaVersion},
         {"run_id", r.id},
         {"status", to_string(r.status)},
         {"steps_done", r.steps_done},
         {"total_steps", r.cfg.total_steps()},
         {"config", r.cfg.source}};
  if (!r.failure.empty()) j["failure"] = r.failure;
  return j;
}

void RunManager::start_worker(Run& r) {
  r.worker = std::jthread([&r](std::stop_token st) {
    const double accel = r.cfg.time_acceleration;
    std::mutex sleep_mu;
    std::condition_variable_any sleep_cv;
    while (!st.stop_requested()) {
      const auto t0 = std::chrono::steady_clock::now();
      {
        std::lock_guard lk(r.step_mu);
        if (r.driver->record().status != RunStatus::Running) break;
        try {
          r.driver->advance(1);
        } catch (const std::exception& e) {
          std::lock_guard dl(r.data_mu);
          r.failure = e.what();
        }
        r.sync_status();
        if (r.driver->record().status != RunStatus::Running) break;
      }
      if (accel > 0) {
        std::unique_lock sl(sleep_mu);
        sleep_cv.wait_until(sl, st, t0 + std::chrono::duration<double>(accel), [] { return false; });
      }
    }
  });
}

void RunManager::stop_worker(Run& r) {
  if (r.worker.joinable()) {
    r.worker.request_stop();
    r.worker.join();
  }
}

RunStatus RunManager::control(const std::string& id, const RunControlCommand& cmd) {
  using K = RunControlCommand::Kind;
  Run& r = get(id);
  if (!r.driver) {
    std::lock_guard lk(r.data_mu);
    throw SimError(ErrorCode::IllegalTransition, "run is " + std::string(to_string(r.status)));
  }
  auto require = [&](RunStatus want, const char* what) {
    const RunStatus s = r.driver->record().status;
    if (s != want)
      throw SimError(ErrorCode::IllegalTransition,
                     std::string(what) + " requires " + std::string(to_string(want)) + ", run is " +
                         std::string(to_string(s)));
  };
  switch (cmd.kind) {
    case K::Start:
    case K::Resume: {
      stop_worker(r);
      std::lock_guard lk(r.step_mu);
      require(cmd.kind == K::Start ? RunStatus::Created : RunStatus::Paused,
              cmd.kind == K::Start ? "start" : "resume");
      r.driver->set_status(RunStatus::Running);
      r.sync_status();
      start_worker(r);
      break;
    }
    case K::Pause: {
      {
        std::lock_guard lk(r.step_mu);
        require(RunStatus::Running, "pause");
        r.driver->set_status(RunStatus::Paused);
        r.sync_status();
      }
      stop_worker(r);
      break;
    }
    case K::StepN: {
      std::lock_guard lk(r.step_mu);
      require(RunStatus::Paused, "step");
      try {
        r.driver->advance(cmd.n);
      } catch (const std::exception& e) {
        std::lock_guard dl(r.data_mu);
        r.failure = e.what();
      }
      r.sync_status();
      break;
    }
    case K::Stop: {
      {
        std::lock_guard lk(r.step_mu);
        r.driver->set_status(RunStatus::Finished);
        r.sync_status();
      }
      stop_worker(r);
      break;
    }
  }
  return status(id);
}

void RunManager::wait(const std::string& id) {
  Run& r = get(id);
  if (r.worker.joinable()) r.worker.join();
}

std::int64_t RunManager::steps_done(const std::string& id) const {
  Run& r = get(id);
  std::lock_guard lk(r.data_mu);
  return r.steps_done;
}

json RunManager::timeline(const std::string& id) const {
  Run& r = get(id);
  std::lock_guard lk(r.data_mu);
  std::map<InterventionId, std::int64_t> applied;
  for (const auto& e : r.events)
    if (const auto* a = e.as<ev::InterventionApplied>()) applied[a->intervention.intervention_id] = e.step.abs_step;
  json markers = json::array();
  for (const auto& [iid, iv] : r.interventions) {
    json m = iv;
    m["applied"] = applied.contains(iid);
    if (applied.contains(iid)) m["applied_step"] = applied[iid];
    markers.push_back(std::move(m));
  }
  return json{{"schema_version", kApiSchemaVersion},
              {"run_id", r.id},
              {"status", to_string(r.status)},
              {"current_step", r.steps_done},
              {"total_steps", r.cfg.total_steps()},
              {"steps_per_day", r.cfg.steps_per_day},
              {"snapshot_steps", r.snapshot_steps},
              {"interventions", std::move(markers)}};
}

namespace {

std::int64_t resolve_step(std::optional<std::int64_t> step, std::int64_t steps_done) {
  const std::int64_t t = step.value_or(steps_done);
  if (t < 0) throw SimError(ErrorCode::InvalidValue, "step must be >= 0");
  if (t > steps_done)
    throw SimError(ErrorCode::StepNotReached,
                   "step " + std::to_string(t) + " > committed " + std::to_string(steps_done));
  return t;
}

LogReplay fold(const RunConfig& cfg, const std::vector<Event>& events, std::int64_t step) {
  LogReplay rep(cfg);
  for (const auto& e : events) {
    if (e.step.abs_step >= step) break;
    rep.apply(e);
  }
  return rep;
}

}  // namespace

json RunManager::agents_by_state(const std::string& id, std::optional<AgentState> state,
                                 std::optional<std::int64_t> step) const {
  Run& r = get(id);
  std::lock_guard lk(r.data_mu);
  const std::int64_t t = resolve_step(step, r.steps_done);
  const LogReplay rep = fold(r.cfg, r.events, t);
  json agents = json::array();
  std::array<int, kNumStates> counts{};
  for (const auto& [uid, s] : rep.states()) {
    ++counts[index_of(s)];
    if (state && *state != s) continue;
    json a{{"uid", uid}, {"class", to_string(rep.classes().at(uid))}, {"balance", rep.balances().at(uid)}};
    if (!state) a["state"] = to_string(s);
    agents.push_back(std::move(a));
  }
  json by_state = json::object();
  for (std::size_t i = 0; i < kNumStates; ++i) by_state[std::string(to_string(static_cast<AgentState>(i)))] = counts[i];
  json j{{"schema_version", kApiSchemaVersion}, {"run_id", r.id}, {"step", t},
         {"counts", std::move(by_state)}, {"agents", std::move(agents)}};
  j["state"] = state ? json(to_string(*state)) : json(nullptr);
  return j;
}

json RunManager::agent_detail(const std::string& id, Uid uid, std::optional<std::int64_t> step) const {
  Run& r = get(id);
  std::lock_guard lk(r.data_mu);
  const std::int64_t t = resolve_step(step, r.steps_done);
  auto pit = std::find_if(r.cfg.population.begin(), r.cfg.population.end(),
                          [&](const PlayerProfile& p) { return p.uid == uid; });
  if (pit == r.cfg.population.end())
    throw SimError(ErrorCode::UnknownRecipient, "no agent with uid " + std::to_string(uid));
  const LogReplay rep = fold(r.cfg, r.events, t);
  std::vector<const Event*> mine;
  int matches = 0;
  json rationale = nullptr, last_action = nullptr;
  for (const auto& e : r.events) {
    if (e.step.abs_step >= t) break;
    if (e.uid != uid) continue;
    mine.push_back(&e);
    if (const auto* a = e.as<ev::ActionChosen>()) {
      rationale = a->rationale;
      last_action = to_string(a->action);
    }
    if (e.as<ev::BattleResolved>()) ++matches;
  }
  json history = json::array();
  const std::size_t k = static_cast<std::size_t>(r.cfg.history_k);
  for (std::size_t i = mine.size() > k ? mine.size() - k : 0; i < mine.size(); ++i) history.push_back(*mine[i]);
  return json{{"schema_version", kApiSchemaVersion},
              {"run_id", r.id},
              {"step", t},
              {"uid", uid},
              {"profile", *pit},
              {"state", to_string(rep.states().at(uid))},
              {"balance", rep.balances().at(uid)},
              {"matches_played", matches},
              {"latest_action", last_action},
              {"latest_rationale", rationale},
              {"history", std::move(history)}};
}

json RunManager::stats(const std::string& id, std::optional<std::int64_t> step,
                       std::optional<std::int64_t> window) const {
  Run& r = get(id);
  std::lock_guard lk(r.data_mu);
  const std::int64_t t = resolve_step(step, r.steps_done);
  const std::int64_t w = window.value_or(r.cfg.steps_per_day);
  if (w < 1) throw SimError(ErrorCode::InvalidValue, "window must be >= 1");
  json j = compute_frame(r.cfg, r.events, r.steps_done, t, w).to_json();
  j["run_id"] = r.id;
  return j;
}

InterventionId RunManager::intervene(const std::string& id, json body) {
  Run& r = get(id);
  if (!body.is_object()) throw SimError(ErrorCode::InvalidValue, "intervention must be an object");
  std::lock_guard lk(r.step_mu);
  if (!r.driver || r.driver->sim().finished() || r.driver->record().status == RunStatus::Finished ||
      r.driver->record().status == RunStatus::Failed)
    throw SimError(ErrorCode::RunFinished, "run no longer accepts interventions");
  if (!body.contains("at_step") || body["at_step"].is_null()) body["at_step"] = r.driver->sim().current_step();
  const Intervention iv = body.get<Intervention>();
  const InterventionId iid = r.driver->sim().schedule(iv);
  r.sync_status();
  return iid;
}

namespace {

std::vector<Event> slice(const std::vector<Event>& events, Seq from_seq, std::size_t limit) {
  auto it = std::lower_bound(events.begin(), events.end(), from_seq,
                             [](const Event& e, Seq s) { return e.seq < s; });
  const auto n = std::min<std::size_t>(limit, static_cast<std::size_t>(events.end() - it));
  return {it, it + static_cast<std::ptrdiff_t>(n)};
}

}  // namespace

std::vector<Event> RunManager::events(const std::string& id, Seq from_seq, std::size_t limit) const {
  Run& r = get(id);
  std::lock_guard lk(r.data_mu);
  return slice(r.events, from_seq, limit);
}

std::vector<Event> RunManager::wait_events(const std::string& id, Seq from_seq, std::size_t limit,
                                           std::chrono::milliseconds timeout, bool& live) const {
  Run& r = get(id);
  std::unique_lock lk(r.data_mu);
  r.data_cv.wait_for(lk, timeout, [&] {
    return !r.live() || (!r.events.empty() && r.events.back().seq >= from_seq);
  });
  live = r.live();
  return slice(r.events, from_seq, limit);
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownRun:
    case ErrorCode::UnknownRecipient: return 404;
    case ErrorCode::IllegalTransition:
    case ErrorCode::RunFinished:
    case ErrorCode::StepNotReached: return 409;
    case ErrorCode::IoFailure:
    case ErrorCode::CorruptSnapshot: return 500;
    default: return 400;
  }
}

}  // namespace mmosim
