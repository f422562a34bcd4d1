#include "mmosim/serialize.hpp"

namespace mmosim {

namespace {

template <typename T>
T required(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw SimError(ErrorCode::InvalidValue, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw SimError(ErrorCode::InvalidValue, std::string("field '") + key + "': " + e.what());
  }
}

SimTime time_from_json(const json& j, int steps_per_day) {
  if (j.is_number_integer()) return SimTime::from_abs(j.get<std::int64_t>(), steps_per_day);
  return SimTime::from_abs(required<std::int64_t>(j, "abs_step"), steps_per_day);
}

}  // namespace

void to_json(json& j, const PlayerProfile& p) {
  j = json{{"uid", p.uid},
           {"class", to_string(p.profile_class)},
           {"skill", p.skill},
           {"frustration_tolerance", p.frustration_tolerance},
           {"spend_propensity", p.spend_propensity},
           {"activeness", p.activeness},
           {"session_length_mean", p.session_length_mean},
           {"habit_informal_trade", p.habit_informal_trade}};
}

void from_json(const json& j, PlayerProfile& p) {
  p.uid = required<Uid>(j, "uid");
  p.profile_class = parse_class(required<std::string>(j, "class"));
  p.skill = required<double>(j, "skill");
  p.frustration_tolerance = required<double>(j, "frustration_tolerance");
  p.spend_propensity = required<double>(j, "spend_propensity");
  p.activeness = required<double>(j, "activeness");
  p.session_length_mean = required<int>(j, "session_length_mean");
  p.habit_informal_trade = j.value("habit_informal_trade", 0.0);
  validate(p);
}

void to_json(json& j, const SimTime& t) {
  j = json{{"abs_step", t.abs_step}, {"day", t.day()}, {"step_in_day", t.step_in_day()}};
}

void to_json(json& j, const BattleOutcome& o) {
  j = json{{"uid", o.uid},
           {"match_index", o.match_index},
           {"win", o.win},
           {"income", o.income},
           {"step", o.step.abs_step}};
}

BattleOutcome outcome_from_json(const json& j, int steps_per_day) {
  BattleOutcome o;
  o.uid = required<Uid>(j, "uid");
  o.match_index = required<int>(j, "match_index");
  o.win = required<bool>(j, "win");
  o.income = required<Currency>(j, "income");
  o.step = time_from_json(j.at("step"), steps_per_day);
  return o;
}

void to_json(json& j, const Channels& c) {
  j = json{{"npc_shop", c.npc_shop},
           {"black_market", c.black_market},
           {"informal_trade", c.informal_trade}};
}

void from_json(const json& j, Channels& c) {
  c.npc_shop = required<bool>(j, "npc_shop");
  c.black_market = required<bool>(j, "black_market");
  c.informal_trade = required<bool>(j, "informal_trade");
}

void to_json(json& j, const Intervention& iv) {
  j = json{{"intervention_id", iv.intervention_id},
           {"at_step", iv.at_step},
           {"kind", to_string(iv.kind)},
           {"announce", iv.announce}};
  switch (iv.kind) {
    case InterventionKind::EnableFeature:
    case InterventionKind::DisableFeature: j["name"] = iv.target; break;
    case InterventionKind::SetParam:
      j["path"] = iv.target;
      j["value"] = iv.value;
      break;
    case InterventionKind::BroadcastEvent: j["body"] = iv.body; break;
  }
}

void from_json(const json& j, Intervention& iv) {
  iv = Intervention{};
  iv.intervention_id = j.value("intervention_id", InterventionId{0});
  iv.at_step = required<std::int64_t>(j, "at_step");
  iv.kind = parse_intervention_kind(required<std::string>(j, "kind"));
  iv.announce = j.value("announce", true);
  switch (iv.kind) {
    case InterventionKind::EnableFeature:
    case InterventionKind::DisableFeature: iv.target = required<std::string>(j, "name"); break;
    case InterventionKind::SetParam:
      iv.target = required<std::string>(j, "path");
      iv.value = required<double>(j, "value");
      break;
    case InterventionKind::BroadcastEvent: iv.body = required<std::string>(j, "body"); break;
  }
}

json context_to_json(const PolicyContext& ctx, Uid uid) {
  json outcomes = json::array();
  for (const auto& o : ctx.last_outcomes) outcomes.push_back(o);
  json actions = json::array();
  for (Action a : ctx.recent_actions) actions.push_back(to_string(a));
  return json{{"schema_version", 1},
              {"uid", uid},
              {"step", ctx.time.abs_step},
              {"state", to_string(ctx.state)},
              {"balance", ctx.balance},
              {"profile", ctx.profile},
              {"last_outcomes", outcomes},
              {"recent_actions", actions},
              {"channels", ctx.channels},
              {"broadcasts", ctx.broadcasts_pending},
              {"session_steps_remaining", ctx.session_steps_remaining},
              {"tradable_items", ctx.tradable_items},
              {"cheapest_price", ctx.cheapest_price}};
}

PolicyContext context_from_json(const json& j, int steps_per_day) {
  PolicyContext ctx;
  ctx.profile = required<PlayerProfile>(j, "profile");
  ctx.state = parse_state(required<std::string>(j, "state"));
  ctx.balance = required<Currency>(j, "balance");
  for (const auto& o : j.at("last_outcomes")) ctx.last_outcomes.push_back(outcome_from_json(o, steps_per_day));
  for (const auto& a : j.at("recent_actions")) ctx.recent_actions.push_back(parse_action(a.get<std::string>()));
  ctx.broadcasts_pending = j.value("broadcasts", std::vector<std::string>{});
  ctx.channels = required<Channels>(j, "channels");
  ctx.time = SimTime::from_abs(required<std::int64_t>(j, "step"), steps_per_day);
  ctx.session_steps_remaining = j.value("session_steps_remaining", 0);
  ctx.tradable_items = j.value("tradable_items", 0);
  ctx.cheapest_price = j.value("cheapest_price", Currency{0});
  return ctx;
}

namespace {

struct PayloadWriter {
  json& j;
  void operator()(const ev::StateTransition& p) {
    j["from"] = to_string(p.from);
    j["to"] = to_string(p.to);
  }
  void operator()(const ev::ActionChosen& p) {
    j["action"] = to_string(p.action);
    j["rationale_text"] = p.rationale;
    j["context"] = context_to_json(p.context, p.context.profile.uid);
  }
  void operator()(const ev::BattleResolved& p) { j["outcome"] = p.outcome; }
  void operator()(const ev::TradeExecuted& p) {
    j["listing_id"] = p.listing_id;
    j["buyer"] = p.buyer;
    j["seller"] = p.seller;
    j["item"] = p.item;
    j["price"] = p.price;
    j["tax"] = p.tax;
  }
  void operator()(const ev::InformalTradeExecuted& p) {
    j["u1"] = p.u1;
    j["u2"] = p.u2;
    j["item"] = p.item;
    j["fraud"] = p.fraud;
    j["payment"] = p.payment;
  }
  void operator()(const ev::NpcPurchase& p) {
    j["item"] = p.item;
    j["price"] = p.price;
  }
  void operator()(const ev::InterventionApplied& p) {
    j["intervention_id"] = p.intervention.intervention_id;
    j["intervention"] = p.intervention;
  }
  void operator()(const ev::MessageDelivered& p) {
    j["msg_id"] = p.msg_id;
    j["topic"] = to_string(p.topic);
    j["body"] = p.body;
  }
  void operator()(const ev::SessionStart& p) { j["session_length"] = p.session_length; }
  void operator()(const ev::SessionEnd&) {}
  void operator()(const ev::ListingCreated& p) {
    j["listing_id"] = p.listing_id;
    j["item"] = p.item;
    j["ask_price"] = p.ask_price;
  }
  void operator()(const ev::ListingCancelled& p) {
    j["listing_id"] = p.listing_id;
    j["item"] = p.item;
  }
  void operator()(const ev::ActionRejected& p) {
    j["action"] = to_string(p.action);
    j["reason"] = p.reason;
  }
  void operator()(const ev::PolicyFailure& p) { j["reason"] = p.reason; }
};

}  // namespace

void to_json(json& j, const Event& e) {
  json payload{{"type", payload_kind(e.payload)}};
  std::visit(PayloadWriter{payload}, e.payload);
  j = json{{"seq", e.seq}, {"step", e.step}, {"payload", payload}};
  if (e.uid) j["uid"] = *e.uid;
}

Event event_from_json(const json& j, int steps_per_day) {
  Event e;
  e.seq = required<Seq>(j, "seq");
  e.step = time_from_json(j.at("step"), steps_per_day);
  if (j.contains("uid")) e.uid = j.at("uid").get<Uid>();
  const json& p = j.at("payload");
  const auto type = required<std::string>(p, "type");
  if (type == "state_transition") {
    e.payload = ev::StateTransition{parse_state(required<std::string>(p, "from")),
                                    parse_state(required<std::string>(p, "to"))};
  } else if (type == "action_chosen") {
    e.payload = ev::ActionChosen{parse_action(required<std::string>(p, "action")),
                                 required<std::string>(p, "rationale_text"),
                                 context_from_json(p.at("context"), steps_per_day)};
  } else if (type == "battle_resolved") {
    e.payload = ev::BattleResolved{outcome_from_json(p.at("outcome"), steps_per_day)};
  } else if (type == "trade_executed") {
    e.payload = ev::TradeExecuted{required<ListingId>(p, "listing_id"), required<Uid>(p, "buyer"),
                                  required<Uid>(p, "seller"), required<ItemId>(p, "item"),
                                  required<Currency>(p, "price"), required<Currency>(p, "tax")};
  } else if (type == "informal_trade_executed") {
    e.payload = ev::InformalTradeExecuted{required<Uid>(p, "u1"), required<Uid>(p, "u2"),
                                          required<ItemId>(p, "item"), required<bool>(p, "fraud"),
                                          required<Currency>(p, "payment")};
  } else if (type == "npc_purchase") {
    e.payload = ev::NpcPurchase{required<ItemId>(p, "item"), required<Currency>(p, "price")};
  } else if (type == "intervention_applied") {
    e.payload = ev::InterventionApplied{required<Intervention>(p, "intervention")};
  } else if (type == "message_delivered") {
    e.payload = ev::MessageDelivered{required<MsgId>(p, "msg_id"),
                                     parse_topic(required<std::string>(p, "topic")),
                                     required<std::string>(p, "body")};
  } else if (type == "session_start") {
    e.payload = ev::SessionStart{required<int>(p, "session_length")};
  } else if (type == "session_end") {
    e.payload = ev::SessionEnd{};
  } else if (type == "listing_created") {
    e.payload = ev::ListingCreated{required<ListingId>(p, "listing_id"),
                                   required<ItemId>(p, "item"),
                                   required<Currency>(p, "ask_price")};
  } else if (type == "listing_cancelled") {
    e.payload = ev::ListingCancelled{required<ListingId>(p, "listing_id"),
                                     required<ItemId>(p, "item")};
  } else if (type == "action_rejected") {
    e.payload = ev::ActionRejected{parse_action(required<std::string>(p, "action")),
                                   required<std::string>(p, "reason")};
  } else if (type == "policy_failure") {
    e.payload = ev::PolicyFailure{required<std::string>(p, "reason")};
  } else {
    throw SimError(ErrorCode::InvalidValue, "unknown event type '" + type + "'");
  }
  return e;
}

std::string event_to_line(const Event& e) { return json(e).dump(); }

Event event_from_line(const std::string& line, int steps_per_day) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& err) {
    throw SimError(ErrorCode::InvalidValue, std::string("bad event record: ") + err.what());
  }
  return event_from_json(j, steps_per_day);
}

}  // namespace mmosim
