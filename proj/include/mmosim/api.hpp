#pragma once

// Control plane. RunManager owns the runs under a root directory and answers
// every console query; ApiServer exposes it over local HTTP.
//
// Read queries fold the committed log, so historical and live steps share
// one code path and answers survive a restart unchanged. Control and
// intervention commands serialize with the engine at step boundaries.

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "mmosim/runner.hpp"

namespace mmosim {

inline constexpr int kApiSchemaVersion = 1;

struct RunControlCommand {
  enum class Kind { Start, Pause, Resume, StepN, Stop };
  Kind kind = Kind::Start;
  std::int64_t n = 1;

  /// {"command": "start"|"pause"|"resume"|"step"|"stop", "n": k}
  static RunControlCommand from_json(const nlohmann::json& j);
};

class RunManager {
 public:
  explicit RunManager(fs::path root);
  ~RunManager();
  RunManager(const RunManager&) = delete;
  RunManager& operator=(const RunManager&) = delete;

  /// Creates a run from a config document; returns its id (the config's
  /// run_id, suffixed when taken). Throws InvalidConfig.
  std::string create(const nlohmann::json& config_doc);
  /// Registers an existing run directory. Unfinished runs are resumed from
  /// their latest snapshot and come back Paused.
  std::string open(const fs::path& run_dir);

  std::vector<std::string> run_ids() const;
  RunStatus status(const std::string& id) const;
  nlohmann::json record(const std::string& id) const;

  /// Throws IllegalTransition. StepN runs synchronously.
  RunStatus control(const std::string& id, const RunControlCommand& cmd);
  /// Blocks until the background worker (if any) has stopped.
  void wait(const std::string& id);

  nlohmann::json timeline(const std::string& id) const;
  /// Step defaults to the latest committed step; Throws StepNotReached.
  nlohmann::json agents_by_state(const std::string& id, std::optional<AgentState> state,
                                 std::optional<std::int64_t> step) const;
  nlohmann::json agent_detail(const std::string& id, Uid uid, std::optional<std::int64_t> step) const;
  nlohmann::json stats(const std::string& id, std::optional<std::int64_t> step,
                       std::optional<std::int64_t> window) const;
  /// A missing at_step is stamped to the next unexecuted step. Throws
  /// PastStep, UnknownFeature, UnknownParamPath, InvalidValue, RunFinished.
  InterventionId intervene(const std::string& id, nlohmann::json intervention);

  /// Committed events with seq >= from_seq, at most `limit`.
  std::vector<Event> events(const std::string& id, Seq from_seq, std::size_t limit) const;
  /// Like events() but waits up to `timeout` for something new. `live` is
  /// set false once the run can no longer produce events.
  std::vector<Event> wait_events(const std::string& id, Seq from_seq, std::size_t limit,
                                 std::chrono::milliseconds timeout, bool& live) const;

  std::int64_t steps_done(const std::string& id) const;
  const fs::path& root() const { return root_; }

 private:
  struct Run;
  Run& get(const std::string& id) const;
  void start_worker(Run& r);
  void stop_worker(Run& r);
  std::string adopt(std::unique_ptr<Run> r);

  fs::path root_;
  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<Run>> runs_;
};

class ApiServer {
 public:
  /// `static_dir` is mounted at /console when given.
  explicit ApiServer(RunManager& manager, std::optional<fs::path> static_dir = std::nullopt);
  ~ApiServer();

  /// Binds and serves on a background thread; port 0 picks a free one.
  /// Returns the bound port. Throws IoFailure.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// HTTP status for an error code.
int http_status(ErrorCode code);

}  // namespace mmosim
