#include "mmosim/persistence.hpp"

#include <fstream>
#include <sstream>

#include "mmosim/hash.hpp"
#include "mmosim/serialize.hpp"

namespace mmosim {

using nlohmann::json;

json make_log_header(const RunConfig& cfg) {
  return json{{"format", "mmosim.log"},
              {"config_version", cfg.config_version},
              {"seed", cfg.seed},
              {"config_hash", config_hash(cfg)},
              {"config", cfg.source},
              {"run_id", cfg.run_id},
              {"steps_per_day", cfg.steps_per_day}};
}

namespace {

struct Scan {
  json header;
  std::vector<std::string> lines;  // committed event lines
  std::int64_t steps_done = 0;
  Seq last_seq = 0;
  std::uintmax_t committed_bytes = 0;
  std::size_t uncommitted_lines = 0;
};

std::optional<std::int64_t> commit_of(const json& j) {
  if (j.is_object() && j.contains("commit")) return j.at("commit").get<std::int64_t>();
  return std::nullopt;
}

// Reads the log; stops at `stop_after` steps if given.
Scan scan(const fs::path& path, std::optional<std::int64_t> stop_after = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SimError(ErrorCode::IoFailure, "cannot open log " + path.string());
  Scan s;
  std::string line;
  if (!std::getline(in, line) || in.eof())
    throw SimError(ErrorCode::CorruptSnapshot, "log has no complete header: " + path.string());
  try {
    s.header = json::parse(line);
  } catch (const json::parse_error& e) {
    throw SimError(ErrorCode::CorruptSnapshot, std::string("log header: ") + e.what());
  }
  if (s.header.value("config_version", 0) != kConfigVersion)
    throw SimError(ErrorCode::VersionMismatch, "log config_version " +
                                                   std::to_string(s.header.value("config_version", 0)));
  std::uintmax_t offset = line.size() + 1;
  s.committed_bytes = offset;
  std::vector<std::string> pending;
  Seq pending_last = 0;
  if (stop_after && *stop_after == 0) return s;
  while (std::getline(in, line)) {
    const bool complete = !in.eof();
    offset += line.size() + (complete ? 1 : 0);
    if (!complete) {
      ++s.uncommitted_lines;
      break;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      ++s.uncommitted_lines;
      break;
    }
    if (auto c = commit_of(j)) {
      for (auto& l : pending) s.lines.push_back(std::move(l));
      pending.clear();
      s.steps_done = *c;
      s.last_seq = std::max(s.last_seq, j.value("last_seq", pending_last));
      s.committed_bytes = offset;
      if (stop_after && s.steps_done >= *stop_after) return s;
    } else {
      pending_last = j.value("seq", Seq{0});
      pending.push_back(std::move(line));
    }
  }
  s.uncommitted_lines += pending.size();
  if (stop_after && s.steps_done < *stop_after)
    throw SimError(ErrorCode::StepNotReached, "log covers " + std::to_string(s.steps_done) +
                                                  " steps, asked for " + std::to_string(*stop_after));
  return s;
}

}  // namespace

EventLogWriter::EventLogWriter(const fs::path& path, const json& header) : path_(path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  file_ = std::fopen(path.c_str(), "wb");
  if (!file_) throw SimError(ErrorCode::IoFailure, "cannot create log " + path.string());
  write_line(header.dump());
  std::fflush(file_);
}

EventLogWriter::~EventLogWriter() {
  if (file_) std::fclose(file_);
}

std::unique_ptr<EventLogWriter> EventLogWriter::reopen(const fs::path& path,
                                                       std::optional<std::int64_t> steps_done) {
  Scan s = scan(path, steps_done);
  fs::resize_file(path, s.committed_bytes);
  std::unique_ptr<EventLogWriter> w(new EventLogWriter());
  w->path_ = path;
  w->file_ = std::fopen(path.c_str(), "ab");
  if (!w->file_) throw SimError(ErrorCode::IoFailure, "cannot append to log " + path.string());
  w->last_seq_ = s.last_seq;
  w->steps_done_ = s.steps_done;
  return w;
}

void EventLogWriter::write_line(const std::string& line) {
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fputc('\n', file_) == EOF)
    throw SimError(ErrorCode::IoFailure, "write failed on " + path_.string());
}

void EventLogWriter::append(const std::vector<Event>& events) {
  Seq expect = last_seq_ + 1;
  for (const auto& e : events) {
    if (e.seq != expect)
      throw SimError(ErrorCode::SeqGap, "expected seq " + std::to_string(expect) + ", got " +
                                            std::to_string(e.seq));
    ++expect;
  }
  for (const auto& e : events) write_line(event_to_line(e));
  if (!events.empty()) last_seq_ = events.back().seq;
}

void EventLogWriter::commit(std::int64_t steps_done) {
  write_line(json{{"commit", steps_done}, {"last_seq", last_seq_}}.dump());
  if (std::fflush(file_) != 0) throw SimError(ErrorCode::IoFailure, "flush failed on " + path_.string());
  steps_done_ = steps_done;
}

LogContents read_log(const fs::path& path) {
  Scan s = scan(path);
  LogContents c;
  c.header = std::move(s.header);
  c.steps_done = s.steps_done;
  c.uncommitted_lines = s.uncommitted_lines;
  const int spd = c.header.at("steps_per_day").get<int>();
  c.events.reserve(s.lines.size());
  for (const auto& l : s.lines) c.events.push_back(event_from_line(l, spd));
  return c;
}

std::int64_t recover_log(const fs::path& path) {
  Scan s = scan(path);
  fs::resize_file(path, s.committed_bytes);
  return s.steps_done;
}

std::string log_content_hash(const fs::path& path) {
  Scan s = scan(path);
  std::string buf;
  for (const auto& l : s.lines) {
    buf += l;
    buf += '\n';
  }
  return sha256_hex(buf);
}

std::string events_hash(const std::vector<Event>& events) {
  std::string buf;
  for (const auto& e : events) {
    buf += event_to_line(e);
    buf += '\n';
  }
  return sha256_hex(buf);
}

std::vector<Event> query(const std::vector<Event>& log, const EventFilter& f) {
  std::vector<Event> out;
  for (const auto& e : log) {
    if (f.uid && e.uid != f.uid) continue;
    if (f.step_from && e.step.abs_step < *f.step_from) continue;
    if (f.step_to && e.step.abs_step >= *f.step_to) continue;
    if (f.kind && payload_kind(e.payload) != *f.kind) continue;
    if (f.from_seq && e.seq < *f.from_seq) continue;
    out.push_back(e);
  }
  return out;
}

// Snapshots.

SnapshotStore::SnapshotStore(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
  const fs::path manifest = dir_ / "manifest.json";
  if (!fs::exists(manifest)) return;
  std::ifstream in(manifest);
  json j;
  try {
    j = json::parse(in);
    for (const auto& r : j.at("snapshots"))
      entries_.push_back({r.at("step").get<std::int64_t>(), r.at("file").get<std::string>(),
                          r.at("sha256").get<std::string>()});
  } catch (const json::exception& e) {
    throw SimError(ErrorCode::CorruptSnapshot, std::string("manifest: ") + e.what());
  }
}

void SnapshotStore::save_manifest() const {
  json arr = json::array();
  for (const auto& e : entries_) arr.push_back(json{{"step", e.step}, {"file", e.file}, {"sha256", e.sha256}});
  const fs::path tmp = dir_ / "manifest.json.tmp";
  {
    std::ofstream out(tmp);
    out << json{{"snapshots", arr}}.dump(1) << '\n';
    if (!out) throw SimError(ErrorCode::IoFailure, "cannot write manifest in " + dir_.string());
  }
  fs::rename(tmp, dir_ / "manifest.json");
}

SnapshotEntry SnapshotStore::write(const json& snapshot) {
  const auto step = snapshot.at("step").get<std::int64_t>();
  const std::string body = snapshot.dump();
  SnapshotEntry e{step, "snapshot_" + std::to_string(step) + ".json", sha256_hex(body)};
  {
    std::ofstream out(dir_ / e.file, std::ios::binary);
    out << body;
    if (!out) throw SimError(ErrorCode::IoFailure, "cannot write snapshot " + e.file);
  }
  std::erase_if(entries_, [&](const SnapshotEntry& x) { return x.step == step; });
  entries_.push_back(e);
  std::sort(entries_.begin(), entries_.end(), [](auto& a, auto& b) { return a.step < b.step; });
  save_manifest();
  return e;
}

json SnapshotStore::load(std::int64_t step) const {
  for (const auto& e : entries_) {
    if (e.step != step) continue;
    std::ifstream in(dir_ / e.file, std::ios::binary);
    if (!in) throw SimError(ErrorCode::IoFailure, "cannot open snapshot " + e.file);
    std::stringstream ss;
    ss << in.rdbuf();
    if (sha256_hex(ss.str()) != e.sha256)
      throw SimError(ErrorCode::CorruptSnapshot, e.file + " does not match its manifest hash");
    try {
      return json::parse(ss.str());
    } catch (const json::parse_error& err) {
      throw SimError(ErrorCode::CorruptSnapshot, err.what());
    }
  }
  throw SimError(ErrorCode::StepNotReached, "no snapshot at step " + std::to_string(step));
}

std::optional<SnapshotEntry> SnapshotStore::at_or_before(std::int64_t step) const {
  std::optional<SnapshotEntry> best;
  for (const auto& e : entries_)
    if (e.step <= step) best = e;
  return best;
}

void SnapshotStore::truncate_after(std::int64_t step) {
  std::erase_if(entries_, [&](const SnapshotEntry& x) { return x.step > step; });
  save_manifest();
}

json read_snapshot_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SimError(ErrorCode::IoFailure, "cannot open snapshot " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SimError(ErrorCode::CorruptSnapshot, e.what());
  }
}

// Run records.

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Created: return "created";
    case RunStatus::Running: return "running";
    case RunStatus::Paused: return "paused";
    case RunStatus::Finished: return "finished";
    case RunStatus::Failed: return "failed";
  }
  return "?";
}

RunStatus parse_run_status(std::string_view s) {
  for (auto st : {RunStatus::Created, RunStatus::Running, RunStatus::Paused, RunStatus::Finished,
                  RunStatus::Failed})
    if (to_string(st) == s) return st;
  throw SimError(ErrorCode::InvalidValue, "unknown run status '" + std::string(s) + "'");
}

void check_status_transition(RunStatus from, RunStatus to) {
  using enum RunStatus;
  bool ok = false;
  switch (from) {
    case Created: ok = to == Running || to == Paused || to == Finished || to == Failed; break;
    case Running: ok = to == Paused || to == Finished || to == Failed; break;
    case Paused: ok = to == Running || to == Finished || to == Failed; break;
    case Finished:
    case Failed: ok = false; break;
  }
  if (!ok)
    throw SimError(ErrorCode::IllegalTransition,
                   std::string(to_string(from)) + " -> " + std::string(to_string(to)));
}

json RunRecord::to_json() const {
  json snaps = json::array();
  for (const auto& e : snapshots) snaps.push_back(json{{"step", e.step}, {"file", e.file}, {"sha256", e.sha256}});
  return json{{"run_id", run_id},         {"config", config},     {"status", to_string(status)},
              {"created_at", created_at}, {"log_path", log_path}, {"snapshots", snaps}};
}

RunRecord RunRecord::from_json(const json& j) {
  RunRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.config = j.at("config");
  r.status = parse_run_status(j.at("status").get<std::string>());
  r.created_at = j.at("created_at").get<std::string>();
  r.log_path = j.at("log_path").get<std::string>();
  for (const auto& s : j.at("snapshots"))
    r.snapshots.push_back({s.at("step").get<std::int64_t>(), s.at("file").get<std::string>(),
                           s.at("sha256").get<std::string>()});
  return r;
}

void save_run_record(const fs::path& run_dir, const RunRecord& r) {
  fs::create_directories(run_dir);
  std::ofstream out(run_dir / "run.json");
  out << r.to_json().dump(1) << '\n';
  if (!out) throw SimError(ErrorCode::IoFailure, "cannot write run record in " + run_dir.string());
}

RunRecord load_run_record(const fs::path& run_dir) {
  std::ifstream in(run_dir / "run.json");
  if (!in) throw SimError(ErrorCode::UnknownRun, "no run record in " + run_dir.string());
  try {
    return RunRecord::from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw SimError(ErrorCode::CorruptSnapshot, std::string("run record: ") + e.what());
  }
}

}  // namespace mmosim
