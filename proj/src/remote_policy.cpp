// Remote-policy transport. Kept apart from policy.cpp so only this unit
// pulls in the HTTP client.

#include <chrono>

#include "httplib.h"
#include "mmosim/policy.hpp"
#include "mmosim/serialize.hpp"

namespace mmosim {

RemoteEndpoint RemoteEndpoint::parse(const std::string& url, int deadline_ms) {
  std::string rest = url;
  if (rest.starts_with("http://")) rest = rest.substr(7);
  RemoteEndpoint ep;
  ep.deadline_ms = deadline_ms;
  const auto slash = rest.find('/');
  std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
  if (slash != std::string::npos) ep.path = rest.substr(slash);
  const auto colon = hostport.rfind(':');
  if (colon == std::string::npos) throw SimError(ErrorCode::InvalidConfig, "endpoint needs a port: " + url);
  ep.host = hostport.substr(0, colon);
  try {
    ep.port = std::stoi(hostport.substr(colon + 1));
  } catch (const std::exception&) {
    throw SimError(ErrorCode::InvalidConfig, "bad endpoint port: " + url);
  }
  return ep;
}

ActionDecision remote_decide(const RemoteEndpoint& endpoint, OutboundPool& pool,
                             const PolicyContext& ctx) {
  const std::string body = context_to_json(ctx, ctx.profile.uid).dump();
  auto lease = pool.acquire();
  const auto start = std::chrono::steady_clock::now();

  httplib::Client client(endpoint.host, endpoint.port);
  const auto sec = endpoint.deadline_ms / 1000;
  const auto usec = (endpoint.deadline_ms % 1000) * 1000;
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  auto res = client.Post(endpoint.path, body, "application/json");
  lease.release();

  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::Write ||
        err == httplib::Error::ConnectionTimeout)
      throw SimError(ErrorCode::Timeout, "no response within " +
                                             std::to_string(endpoint.deadline_ms) + " ms (" +
                                             httplib::to_string(err) + ")");
    throw SimError(ErrorCode::Timeout, "request failed: " + httplib::to_string(err));
  }
  if (res->status != 200)
    throw SimError(ErrorCode::MalformedResponse, "HTTP status " + std::to_string(res->status));
  if (ms > endpoint.deadline_ms)
    throw SimError(ErrorCode::Timeout, "response after " + std::to_string(ms) + " ms");
  ActionDecision d = parse_remote_response(res->body);
  d.latency_ms = ms;
  return d;
}

}  // namespace mmosim
