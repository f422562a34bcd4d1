#pragma once

// Run storage: an append-only line-delimited event log with per-step commit
// markers, content-hashed snapshots with a manifest, and the run record.
//
// Log layout: line 1 is the header {"config_version", "seed", "config_hash",
// "config", "run_id", "steps_per_day"}; then event records, each step closed
// by {"commit": <steps done>, "last_seq": <seq>}. Readers ignore anything
// after the last commit marker.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmosim/config.hpp"
#include "mmosim/domain.hpp"

namespace mmosim {

namespace fs = std::filesystem;

nlohmann::json make_log_header(const RunConfig& cfg);

class EventLogWriter {
 public:
  /// Creates (truncates) the log and writes the header.
  EventLogWriter(const fs::path& path, const nlohmann::json& header);
  ~EventLogWriter();
  EventLogWriter(const EventLogWriter&) = delete;
  EventLogWriter& operator=(const EventLogWriter&) = delete;

  /// Reopens an existing log for appending after cutting it back to the end
  /// of step `steps_done` (the whole committed prefix when nullopt).
  static std::unique_ptr<EventLogWriter> reopen(const fs::path& path,
                                                std::optional<std::int64_t> steps_done = std::nullopt);

  /// Appends events that continue the sequence. Throws SeqGap or IoFailure.
  void append(const std::vector<Event>& events);
  /// Writes the commit marker for `steps_done` and flushes.
  void commit(std::int64_t steps_done);

  Seq last_seq() const { return last_seq_; }
  std::int64_t steps_done() const { return steps_done_; }

 private:
  EventLogWriter() = default;
  void write_line(const std::string& line);

  fs::path path_;
  std::FILE* file_ = nullptr;
  Seq last_seq_ = 0;
  std::int64_t steps_done_ = 0;
};

struct LogContents {
  nlohmann::json header;
  std::vector<Event> events;  // committed events only
  std::int64_t steps_done = 0;
  std::size_t uncommitted_lines = 0;
  int steps_per_day() const { return header.at("steps_per_day").get<int>(); }
};

/// Reads the committed prefix. Throws IoFailure, VersionMismatch or
/// CorruptSnapshot on an unreadable header.
LogContents read_log(const fs::path& path);

/// Truncates the file to its committed prefix; returns the steps it covers.
std::int64_t recover_log(const fs::path& path);

/// SHA-256 of the committed event records (header and markers excluded).
std::string log_content_hash(const fs::path& path);
std::string events_hash(const std::vector<Event>& events);

struct EventFilter {
  std::optional<Uid> uid;
  std::optional<std::int64_t> step_from;  // inclusive
  std::optional<std::int64_t> step_to;    // exclusive
  std::optional<std::string> kind;        // payload kind, e.g. "battle_resolved"
  std::optional<Seq> from_seq;            // inclusive
};

std::vector<Event> query(const std::vector<Event>& log, const EventFilter& filter);

struct SnapshotEntry {
  std::int64_t step = 0;
  std::string file;
  std::string sha256;
};

/// Snapshot files plus manifest.json inside a directory.
class SnapshotStore {
 public:
  explicit SnapshotStore(fs::path dir);

  SnapshotEntry write(const nlohmann::json& snapshot);
  /// Verifies the content hash; throws CorruptSnapshot on mismatch.
  nlohmann::json load(std::int64_t step) const;
  /// Latest snapshot at or before `step`.
  std::optional<SnapshotEntry> at_or_before(std::int64_t step) const;
  const std::vector<SnapshotEntry>& entries() const { return entries_; }
  /// Drops entries after `step` (used when a run is resumed from there).
  void truncate_after(std::int64_t step);

 private:
  void save_manifest() const;
  fs::path dir_;
  std::vector<SnapshotEntry> entries_;
};

/// Reads a standalone snapshot file.
nlohmann::json read_snapshot_file(const fs::path& path);

enum class RunStatus { Created, Running, Paused, Finished, Failed };
std::string_view to_string(RunStatus s);
RunStatus parse_run_status(std::string_view s);
/// Forward-only, except Paused <-> Running. Throws IllegalTransition.
void check_status_transition(RunStatus from, RunStatus to);

struct RunRecord {
  std::string run_id;
  nlohmann::json config;
  RunStatus status = RunStatus::Created;
  std::string created_at;
  std::string log_path;
  std::vector<SnapshotEntry> snapshots;

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

void save_run_record(const fs::path& run_dir, const RunRecord& r);
RunRecord load_run_record(const fs::path& run_dir);

}  // namespace mmosim
