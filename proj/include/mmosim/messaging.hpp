#pragma once

// In-simulation pub/sub: point-to-point, group and broadcast topics with
// next-step delivery. Broadcasts are held per agent until the agent is
// online to drain them, so returning players still see announcements.

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmosim/domain.hpp"

namespace mmosim {

struct Message {
  MsgId msg_id = 0;
  Topic topic;
  std::optional<Uid> sender;  // nullopt = System
  std::string body;
  std::int64_t sent_step = 0;
  std::int64_t deliver_step = 1;

  bool operator==(const Message&) const = default;
};

nlohmann::json message_to_json(const Message& m);
Message message_from_json(const nlohmann::json& j);

class MessageBus {
 public:
  using Groups = std::map<std::uint32_t, std::vector<Uid>>;
  using Bridge = std::function<void(const Message&)>;

  MessageBus() = default;
  MessageBus(std::vector<Uid> uids, Groups groups);

  MessageBus(const MessageBus& o);
  MessageBus& operator=(const MessageBus& o);

  /// Queues for delivery at sent_step + 1. Throws UnknownGroup or
  /// UnknownRecipient.
  MsgId publish(Topic topic, std::optional<Uid> sender, std::string body, std::int64_t sent_step);

  /// Returns and clears all messages due at or before `step` for `uid`,
  /// ordered by (deliver_step, msg_id).
  std::vector<Message> drain(Uid uid, std::int64_t step);

  /// Mirrors every published broadcast (optional; failures are the bridge's).
  void set_bridge(Bridge bridge) { bridge_ = std::move(bridge); }

  std::size_t pending_count(Uid uid, std::int64_t step) const;
  const Groups& groups() const { return groups_; }

  nlohmann::json to_json() const;
  static MessageBus from_json(const nlohmann::json& j);

 private:
  mutable std::mutex mu_;
  std::vector<Uid> uids_;
  Groups groups_;
  std::map<Uid, std::vector<Message>> mailboxes_;
  std::vector<Message> broadcasts_;
  std::map<Uid, std::size_t> broadcast_cursor_;
  MsgId next_id_ = 1;
  Bridge bridge_;
};

}  // namespace mmosim
