#pragma once

// A run bound to a directory: the simulation plus its event log, snapshot
// store and run record. Layout:
//   <dir>/run.json            run record
//   <dir>/log.jsonl           event log
//   <dir>/snapshots/          snapshot_<step>.json + manifest.json

#include <functional>
#include <memory>

#include "mmosim/engine.hpp"
#include "mmosim/persistence.hpp"

namespace mmosim {

class RunDriver {
 public:
  using Observer = std::function<void(const std::vector<Event>&, std::int64_t step)>;

  /// Fresh run; writes the header and the step-0 snapshot.
  static std::unique_ptr<RunDriver> create(RunConfig cfg, const fs::path& dir);
  /// Continues from a snapshot. The log in `dir` (default: the directory
  /// owning the snapshot) is cut back to the snapshot step.
  static std::unique_ptr<RunDriver> resume(const fs::path& snapshot_file,
                                           std::optional<fs::path> dir = std::nullopt);

  /// Executes up to n steps, logging and snapshotting; returns steps run.
  std::int64_t advance(std::int64_t n);
  void run_to_end();

  Simulation& sim() { return *sim_; }
  const Simulation& sim() const { return *sim_; }
  const fs::path& dir() const { return dir_; }
  fs::path log_path() const { return dir_ / "log.jsonl"; }
  const SnapshotStore& snapshots() const { return *snapshots_; }
  const RunRecord& record() const { return record_; }
  void set_status(RunStatus s);

  void set_observer(Observer o) { observer_ = std::move(o); }
  /// Optional wall-clock pacing (time_acceleration seconds per step).
  void set_pacing(bool on) { pacing_ = on; }

 private:
  RunDriver() = default;
  void attach();
  void on_step(const std::vector<Event>& events, std::int64_t step);

  fs::path dir_;
  std::unique_ptr<Simulation> sim_;
  std::unique_ptr<EventLogWriter> log_;
  std::unique_ptr<SnapshotStore> snapshots_;
  RunRecord record_;
  Observer observer_;
  bool pacing_ = false;
};

std::string utc_now_iso8601();

}  // namespace mmosim
