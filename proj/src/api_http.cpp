#include <atomic>

#include "httplib.h"
#include "mmosim/api.hpp"
#include "mmosim/serialize.hpp"

namespace mmosim {

using nlohmann::json;

namespace {

constexpr std::size_t kEventBatch = 1000;

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& msg) {
  send_json(res, json{{"schema_version", kApiSchemaVersion}, {"error", to_string(code)}, {"message", msg}},
            http_status(code));
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const SimError& e) {
      send_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, ErrorCode::InvalidValue, e.what());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::IoFailure, e.what());
    }
  };
}

std::optional<std::int64_t> int_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  const std::string v = req.get_param_value(name);
  try {
    std::size_t used = 0;
    const std::int64_t x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw SimError(ErrorCode::InvalidValue, std::string(name) + " must be an integer");
  }
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw SimError(ErrorCode::InvalidValue, std::string("body is not JSON: ") + e.what());
  }
}

json events_json(const std::vector<Event>& events) {
  json arr = json::array();
  for (const auto& e : events) arr.push_back(e);
  return arr;
}

}  // namespace

struct ApiServer::Impl {
  RunManager& mgr;
  httplib::Server srv;
  std::thread thread;
  std::atomic<bool> stopping{false};

  explicit Impl(RunManager& m) : mgr(m) {}
};

ApiServer::ApiServer(RunManager& manager, std::optional<fs::path> static_dir)
    : impl_(std::make_unique<Impl>(manager)) {
  auto& srv = impl_->srv;
  RunManager& mgr = manager;
  Impl* impl = impl_.get();

  if (static_dir) srv.set_mount_point("/console", static_dir->string());

  srv.Get("/", guarded([](const httplib::Request&, httplib::Response& res) {
    send_json(res, json{{"schema_version", kApiSchemaVersion},
                        {"service", "mmosim"},
                        {"routes",
                         {"GET /runs", "POST /runs", "GET /runs/{id}", "POST /runs/{id}/control",
                          "GET /runs/{id}/timeline", "GET /runs/{id}/agents?state=&step=",
                          "GET /runs/{id}/agents/{uid}?step=", "GET /runs/{id}/stats?step=&window=",
                          "POST /runs/{id}/interventions", "GET /runs/{id}/events?from_seq=&limit=&follow="}}});
  }));

  srv.Get("/runs", guarded([&mgr](const httplib::Request&, httplib::Response& res) {
    json runs = json::array();
    for (const auto& id : mgr.run_ids())
      runs.push_back({{"run_id", id}, {"status", to_string(mgr.status(id))}});
    send_json(res, json{{"schema_version", kApiSchemaVersion}, {"runs", std::move(runs)}});
  }));

  srv.Post("/runs", guarded([&mgr](const httplib::Request& req, httplib::Response& res) {
    json doc;
    try {
      doc = json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw SimError(ErrorCode::InvalidConfig, e.what());
    }
    const std::string id = mgr.create(doc);
    send_json(res, json{{"schema_version", kApiSchemaVersion}, {"run_id", id}, {"status", "created"}}, 201);
  }));

  srv.Get("/runs/:id", guarded([&mgr](const httplib::Request& req, httplib::Response& res) {
    send_json(res, mgr.record(req.path_params.at("id")));
  }));

  srv.Post("/runs/:id/control", guarded([&mgr](const httplib::Request& req, httplib::Response& res) {
    const auto& id = req.path_params.at("id");
    const RunStatus s = mgr.control(id, RunControlCommand::from_json(parse_body(req)));
    send_json(res, json{{"schema_version", kApiSchemaVersion},
                        {"run_id", id},
                        {"status", to_string(s)},
                        {"steps_done", mgr.steps_done(id)}});
  }));

  srv.Get("/runs/:id/timeline", guarded([&mgr](const httplib::Request& req, httplib::Response& res) {
    send_json(res, mgr.timeline(req.path_params.at("id")));
  }));

  srv.Get("/runs/:id/agents", guarded([&mgr](const httplib::Request& req, httplib::Response& res) {
    std::optional<AgentState> state;
    if (req.has_param("state")) state = parse_state(req.get_param_value("state"));
    send_json(res, mgr.agents_by_state(req.path_params.at("id"), state, int_param(req, "step")));
  }));

  srv.Get("/runs/:id/agents/:uid", guarded([&mgr](const httplib::Request& req, httplib::Response& res) {
    Uid uid = 0;
    try {
      uid = std::stoull(req.path_params.at("uid"));
    } catch (const std::exception&) {
      throw SimError(ErrorCode::InvalidValue, "uid must be an integer");
    }
    send_json(res, mgr.agent_detail(req.path_params.at("id"), uid, int_param(req, "step")));
  }));

  srv.Get("/runs/:id/stats", guarded([&mgr](const httplib::Request& req, httplib::Response& res) {
    send_json(res, mgr.stats(req.path_params.at("id"), int_param(req, "step"), int_param(req, "window")));
  }));

  srv.Post("/runs/:id/interventions", guarded([&mgr](const httplib::Request& req, httplib::Response& res) {
    const auto& id = req.path_params.at("id");
    const InterventionId iid = mgr.intervene(id, parse_body(req));
    send_json(res, json{{"schema_version", kApiSchemaVersion}, {"run_id", id}, {"intervention_id", iid}}, 201);
  }));

  srv.Get("/runs/:id/events", guarded([&mgr, impl](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.path_params.at("id");
    const Seq from = static_cast<Seq>(int_param(req, "from_seq").value_or(1));
    const auto limit = static_cast<std::size_t>(int_param(req, "limit").value_or(kEventBatch));
    mgr.status(id);
    if (req.get_param_value("follow") != "1") {
      auto evs = mgr.events(id, from, limit);
      const Seq next = evs.empty() ? from : evs.back().seq + 1;
      send_json(res, json{{"schema_version", kApiSchemaVersion},
                          {"run_id", id},
                          {"events", events_json(evs)},
                          {"next_seq", next}});
      return;
    }
    // Newline-delimited events; a consumer that falls behind is cut off and
    // reconnects with from_seq.
    auto cursor = std::make_shared<Seq>(from);
    res.set_chunked_content_provider(
        "application/x-ndjson", [&mgr, impl, id, cursor](std::size_t, httplib::DataSink& sink) {
          if (impl->stopping) return false;
          bool live = true;
          auto evs = mgr.wait_events(id, *cursor, kEventBatch, std::chrono::milliseconds(250), live);
          std::string chunk;
          for (const auto& e : evs) {
            chunk += json(e).dump();
            chunk += '\n';
          }
          if (!evs.empty()) *cursor = evs.back().seq + 1;
          if (!chunk.empty() && !sink.write(chunk.data(), chunk.size())) return false;
          if (!live && evs.empty()) {
            sink.done();
            return true;
          }
          return sink.is_writable();
        });
  }));
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start(const std::string& host, int port) {
  auto& srv = impl_->srv;
  const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw SimError(ErrorCode::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->srv.listen_after_bind(); });
  srv.wait_until_ready();
  return bound;
}

void ApiServer::listen(const std::string& host, int port) {
  if (!impl_->srv.listen(host, port))
    throw SimError(ErrorCode::IoFailure, "cannot listen on " + host + ":" + std::to_string(port));
}

void ApiServer::stop() {
  impl_->stopping = true;
  impl_->srv.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace mmosim
