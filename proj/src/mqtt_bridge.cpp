#include "mmosim/mqtt_bridge.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <memory>
#include <mutex>

namespace mmosim {

namespace {

void put_remaining_length(std::vector<std::uint8_t>& out, std::size_t len) {
  do {
    std::uint8_t b = len % 128;
    len /= 128;
    if (len > 0) b |= 0x80;
    out.push_back(b);
  } while (len > 0);
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  out.push_back(static_cast<std::uint8_t>(s.size() >> 8));
  out.push_back(static_cast<std::uint8_t>(s.size() & 0xff));
  out.insert(out.end(), s.begin(), s.end());
}

class Client {
 public:
  Client(BridgeConfig cfg, std::string client_id) : cfg_(std::move(cfg)), client_id_(std::move(client_id)) {}
  ~Client() { disconnect(); }

  void publish(const std::string& topic, const std::string& payload) {
    std::lock_guard lock(mu_);
    if (fd_ < 0 && !connect_locked()) return;
    if (!send_all(mqtt_publish_packet(topic, payload))) {
      disconnect();
      ++failures_;
    }
  }

 private:
  bool connect_locked() {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(cfg_.host.c_str(), std::to_string(cfg_.port).c_str(), &hints, &res) != 0) {
      ++failures_;
      return false;
    }
    for (addrinfo* p = res; p; p = p->ai_next) {
      int fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) {
        fd_ = fd;
        break;
      }
      ::close(fd);
    }
    freeaddrinfo(res);
    if (fd_ < 0 || !send_all(mqtt_connect_packet(client_id_))) {
      disconnect();
      ++failures_;
      return false;
    }
    std::uint8_t connack[4];
    if (::recv(fd_, connack, sizeof connack, MSG_WAITALL) != 4 || connack[0] != 0x20 || connack[3] != 0) {
      disconnect();
      ++failures_;
      return false;
    }
    return true;
  }

  bool send_all(const std::vector<std::uint8_t>& buf) {
    std::size_t off = 0;
    while (off < buf.size()) {
      const auto n = ::send(fd_, buf.data() + off, buf.size() - off, MSG_NOSIGNAL);
      if (n <= 0) return false;
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  void disconnect() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  BridgeConfig cfg_;
  std::string client_id_;
  std::mutex mu_;
  int fd_ = -1;
  std::size_t failures_ = 0;
};

}  // namespace

std::vector<std::uint8_t> mqtt_connect_packet(const std::string& client_id, std::uint16_t keepalive_s) {
  std::vector<std::uint8_t> body;
  put_string(body, "MQTT");
  body.push_back(4);     // protocol level 3.1.1
  body.push_back(0x02);  // clean session
  body.push_back(static_cast<std::uint8_t>(keepalive_s >> 8));
  body.push_back(static_cast<std::uint8_t>(keepalive_s & 0xff));
  put_string(body, client_id);
  std::vector<std::uint8_t> out{0x10};
  put_remaining_length(out, body.size());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

std::vector<std::uint8_t> mqtt_publish_packet(const std::string& topic, const std::string& payload) {
  std::vector<std::uint8_t> body;
  put_string(body, topic);
  body.insert(body.end(), payload.begin(), payload.end());
  std::vector<std::uint8_t> out{0x30};
  put_remaining_length(out, body.size());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

std::string bridge_topic(const std::string& run_id) { return "sim/" + run_id + "/broadcast"; }

MessageBus::Bridge make_mqtt_bridge(const BridgeConfig& cfg, const std::string& run_id, OutboundPool& pool) {
  auto client = std::make_shared<Client>(cfg, "mmosim-" + run_id);
  const std::string topic = bridge_topic(run_id);
  return [client, topic, &pool](const Message& m) {
    try {
      auto lease = pool.acquire();
      client->publish(topic, message_to_json(m).dump());
    } catch (const SimError&) {
      // pool closed during shutdown
    }
  };
}

}  // namespace mmosim
