#pragma once

// Local HTTP decision service standing in for a remote policy.

#include <atomic>
#include <chrono>
#include <functional>
#include <string>
#include <thread>

#include "httplib.h"

namespace testutil {

class StubServer {
 public:
  using Handler = std::function<std::string(const std::string& body)>;

  explicit StubServer(Handler h, std::chrono::milliseconds delay = std::chrono::milliseconds(0))
      : handler_(std::move(h)), delay_(delay) {
    srv_.new_task_queue = [] { return new httplib::ThreadPool(64); };
    srv_.Post("/decide", [this](const httplib::Request& req, httplib::Response& res) {
      const int now = ++inflight_;
      int prev = peak_.load();
      while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
      }
      ++calls_;
      if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
      res.set_content(handler_(req.body), "application/json");
      --inflight_;
    });
    port_ = srv_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { srv_.listen_after_bind(); });
    srv_.wait_until_ready();
  }
  ~StubServer() {
    srv_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/decide"; }
  int peak_concurrency() const { return peak_; }
  int calls() const { return calls_; }

 private:
  Handler handler_;
  std::chrono::milliseconds delay_;
  httplib::Server srv_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> inflight_{0}, peak_{0}, calls_{0};
};

}  // namespace testutil
