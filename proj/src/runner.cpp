#include "mmosim/runner.hpp"

#include <chrono>
#include <ctime>
#include <thread>

namespace mmosim {

std::string utc_now_iso8601() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::unique_ptr<RunDriver> RunDriver::create(RunConfig cfg, const fs::path& dir) {
  std::unique_ptr<RunDriver> d(new RunDriver());
  d->dir_ = dir;
  fs::create_directories(dir);
  const nlohmann::json header = make_log_header(cfg);
  d->record_.run_id = cfg.run_id;
  d->record_.config = cfg.source;
  d->record_.created_at = utc_now_iso8601();
  d->record_.log_path = "log.jsonl";
  d->sim_ = std::make_unique<Simulation>(std::move(cfg));
  d->log_ = std::make_unique<EventLogWriter>(d->log_path(), header);
  fs::remove_all(dir / "snapshots");
  d->snapshots_ = std::make_unique<SnapshotStore>(dir / "snapshots");
  d->record_.snapshots.push_back(d->snapshots_->write(d->sim_->snapshot()));
  save_run_record(dir, d->record_);
  d->attach();
  return d;
}

std::unique_ptr<RunDriver> RunDriver::resume(const fs::path& snapshot_file, std::optional<fs::path> dir) {
  const nlohmann::json snap = read_snapshot_file(snapshot_file);
  std::unique_ptr<RunDriver> d(new RunDriver());
  d->sim_ = Simulation::restore(snap);
  const fs::path origin = fs::absolute(snapshot_file).parent_path().parent_path();
  d->dir_ = dir.value_or(origin);
  fs::create_directories(d->dir_);
  const std::int64_t step = d->sim_->current_step();
  const bool same_dir = fs::exists(d->dir_) && fs::exists(origin) && fs::equivalent(d->dir_, origin);
  if (!same_dir && fs::exists(origin / "log.jsonl"))
    fs::copy_file(origin / "log.jsonl", d->log_path(), fs::copy_options::overwrite_existing);
  if (fs::exists(d->log_path())) {
    d->log_ = EventLogWriter::reopen(d->log_path(), step);
  } else {
    d->log_ = std::make_unique<EventLogWriter>(d->log_path(), make_log_header(d->sim_->config()));
  }
  d->snapshots_ = std::make_unique<SnapshotStore>(d->dir_ / "snapshots");
  d->snapshots_->truncate_after(step);
  if (!d->snapshots_->at_or_before(step) || d->snapshots_->at_or_before(step)->step != step)
    d->snapshots_->write(snap);
  try {
    d->record_ = load_run_record(d->dir_);
  } catch (const SimError&) {
    d->record_.run_id = d->sim_->config().run_id;
    d->record_.config = d->sim_->config().source;
    d->record_.created_at = utc_now_iso8601();
    d->record_.log_path = "log.jsonl";
  }
  d->record_.snapshots = d->snapshots_->entries();
  d->record_.status = RunStatus::Paused;
  save_run_record(d->dir_, d->record_);
  d->attach();
  return d;
}

void RunDriver::attach() {
  sim_->set_step_sink([this](const std::vector<Event>& events, std::int64_t step) { on_step(events, step); });
}

void RunDriver::on_step(const std::vector<Event>& events, std::int64_t step) {
  log_->append(events);
  log_->commit(step + 1);
  const auto& cfg = sim_->config();
  const std::int64_t every = static_cast<std::int64_t>(cfg.steps_per_day) * cfg.snapshot_every_days;
  if ((step + 1) % every == 0) {
    record_.snapshots.push_back(snapshots_->write(sim_->snapshot()));
    save_run_record(dir_, record_);
  }
  if (observer_) observer_(events, step);
}

std::int64_t RunDriver::advance(std::int64_t n) {
  std::int64_t done = 0;
  try {
    while (done < n && !sim_->finished()) {
      const auto t0 = std::chrono::steady_clock::now();
      sim_->run_steps(1);
      ++done;
      const double accel = sim_->config().time_acceleration;
      if (pacing_ && accel > 0)
        std::this_thread::sleep_until(t0 + std::chrono::duration<double>(accel));
    }
  } catch (...) {
    set_status(RunStatus::Failed);
    throw;
  }
  if (sim_->finished()) set_status(RunStatus::Finished);
  return done;
}

void RunDriver::run_to_end() { advance(sim_->config().total_steps()); }

void RunDriver::set_status(RunStatus s) {
  if (s == record_.status) return;
  check_status_transition(record_.status, s);
  record_.status = s;
  save_run_record(dir_, record_);
}

}  // namespace mmosim
