#include "mmosim/messaging.hpp"

#include <algorithm>

namespace mmosim {

using nlohmann::json;

json message_to_json(const Message& m) {
  json j{{"msg_id", m.msg_id},
         {"topic", to_string(m.topic)},
         {"body", m.body},
         {"sent_step", m.sent_step},
         {"deliver_step", m.deliver_step}};
  j["sender"] = m.sender ? json(*m.sender) : json("system");
  return j;
}

Message message_from_json(const json& j) {
  Message m;
  m.msg_id = j.at("msg_id").get<MsgId>();
  m.topic = parse_topic(j.at("topic").get<std::string>());
  if (j.at("sender").is_number()) m.sender = j.at("sender").get<Uid>();
  m.body = j.at("body").get<std::string>();
  m.sent_step = j.at("sent_step").get<std::int64_t>();
  m.deliver_step = j.at("deliver_step").get<std::int64_t>();
  return m;
}

MessageBus::MessageBus(std::vector<Uid> uids, Groups groups)
    : uids_(std::move(uids)), groups_(std::move(groups)) {
  std::sort(uids_.begin(), uids_.end());
  for (Uid u : uids_) {
    mailboxes_[u];
    broadcast_cursor_[u] = 0;
  }
  for (const auto& [gid, members] : groups_)
    for (Uid u : members)
      if (!std::binary_search(uids_.begin(), uids_.end(), u))
        throw SimError(ErrorCode::UnknownRecipient,
                       "group " + std::to_string(gid) + " member " + std::to_string(u));
}

MessageBus::MessageBus(const MessageBus& o) { *this = o; }

MessageBus& MessageBus::operator=(const MessageBus& o) {
  if (this == &o) return *this;
  std::scoped_lock lock(mu_, o.mu_);
  uids_ = o.uids_;
  groups_ = o.groups_;
  mailboxes_ = o.mailboxes_;
  broadcasts_ = o.broadcasts_;
  broadcast_cursor_ = o.broadcast_cursor_;
  next_id_ = o.next_id_;
  bridge_ = o.bridge_;
  return *this;
}

MsgId MessageBus::publish(Topic topic, std::optional<Uid> sender, std::string body,
                          std::int64_t sent_step) {
  Message m;
  Bridge bridge;
  {
    std::lock_guard lock(mu_);
    if (sender && !mailboxes_.contains(*sender))
      throw SimError(ErrorCode::UnknownRecipient, "unknown sender " + std::to_string(*sender));
    std::vector<Uid> recipients;
    switch (topic.kind) {
      case TopicKind::P2P:
        if (!mailboxes_.contains(topic.id))
          throw SimError(ErrorCode::UnknownRecipient, "no agent " + std::to_string(topic.id));
        recipients.push_back(topic.id);
        break;
      case TopicKind::Group: {
        auto it = groups_.find(topic.id);
        if (it == groups_.end())
          throw SimError(ErrorCode::UnknownGroup, "no group " + std::to_string(topic.id));
        recipients = it->second;
        break;
      }
      case TopicKind::Broadcast: break;
    }
    m = Message{next_id_++, topic, sender, std::move(body), sent_step, sent_step + 1};
    if (topic.kind == TopicKind::Broadcast) {
      broadcasts_.push_back(m);
      bridge = bridge_;
    } else {
      for (Uid r : recipients) mailboxes_[r].push_back(m);
    }
  }
  if (bridge) bridge(m);
  return m.msg_id;
}

std::vector<Message> MessageBus::drain(Uid uid, std::int64_t step) {
  std::lock_guard lock(mu_);
  auto box = mailboxes_.find(uid);
  if (box == mailboxes_.end()) return {};
  std::vector<Message> out;
  auto& mail = box->second;
  auto keep = std::stable_partition(mail.begin(), mail.end(),
                                    [&](const Message& m) { return m.deliver_step > step; });
  out.insert(out.end(), keep, mail.end());
  mail.erase(keep, mail.end());

  std::size_t& cursor = broadcast_cursor_[uid];
  while (cursor < broadcasts_.size() && broadcasts_[cursor].deliver_step <= step)
    out.push_back(broadcasts_[cursor++]);

  std::sort(out.begin(), out.end(), [](const Message& a, const Message& b) {
    return std::tie(a.deliver_step, a.msg_id) < std::tie(b.deliver_step, b.msg_id);
  });
  return out;
}

std::size_t MessageBus::pending_count(Uid uid, std::int64_t step) const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  if (auto box = mailboxes_.find(uid); box != mailboxes_.end())
    for (const auto& m : box->second) n += m.deliver_step <= step;
  if (auto c = broadcast_cursor_.find(uid); c != broadcast_cursor_.end())
    for (std::size_t i = c->second; i < broadcasts_.size(); ++i) n += broadcasts_[i].deliver_step <= step;
  return n;
}

json MessageBus::to_json() const {
  std::lock_guard lock(mu_);
  json boxes = json::object();
  for (const auto& [uid, mail] : mailboxes_) {
    if (mail.empty()) continue;
    json arr = json::array();
    for (const auto& m : mail) arr.push_back(message_to_json(m));
    boxes[std::to_string(uid)] = arr;
  }
  json bc = json::array();
  for (const auto& m : broadcasts_) bc.push_back(message_to_json(m));
  json cursors = json::object();
  for (const auto& [uid, c] : broadcast_cursor_) cursors[std::to_string(uid)] = c;
  json groups = json::object();
  for (const auto& [gid, members] : groups_) groups[std::to_string(gid)] = members;
  return json{{"uids", uids_},         {"groups", groups},   {"mailboxes", boxes},
              {"broadcasts", bc},      {"cursors", cursors}, {"next_id", next_id_}};
}

MessageBus MessageBus::from_json(const json& j) {
  Groups groups;
  for (const auto& [k, v] : j.at("groups").items())
    groups[static_cast<std::uint32_t>(std::stoul(k))] = v.get<std::vector<Uid>>();
  MessageBus bus(j.at("uids").get<std::vector<Uid>>(), std::move(groups));
  for (const auto& [k, arr] : j.at("mailboxes").items())
    for (const auto& m : arr) bus.mailboxes_[static_cast<Uid>(std::stoul(k))].push_back(message_from_json(m));
  for (const auto& m : j.at("broadcasts")) bus.broadcasts_.push_back(message_from_json(m));
  for (const auto& [k, v] : j.at("cursors").items())
    bus.broadcast_cursor_[static_cast<Uid>(std::stoul(k))] = v.get<std::size_t>();
  bus.next_id_ = j.at("next_id").get<MsgId>();
  return bus;
}

}  // namespace mmosim
