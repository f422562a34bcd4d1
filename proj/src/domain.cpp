#include "mmosim/domain.hpp"

#include <array>

namespace mmosim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IllegalDecisionPoint: return "IllegalDecisionPoint";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::PolicyFailure: return "PolicyFailure";
    case ErrorCode::ServiceRejection: return "ServiceRejection";
    case ErrorCode::PoolClosed: return "PoolClosed";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::UnknownAction: return "UnknownAction";
    case ErrorCode::ModelNotFitted: return "ModelNotFitted";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InsufficientFunds: return "InsufficientFunds";
    case ErrorCode::ChannelDisabled: return "ChannelDisabled";
    case ErrorCode::UnknownItem: return "UnknownItem";
    case ErrorCode::NotOwned: return "NotOwned";
    case ErrorCode::NotTradable: return "NotTradable";
    case ErrorCode::ListingClosed: return "ListingClosed";
    case ErrorCode::SelfTrade: return "SelfTrade";
    case ErrorCode::NoChannel: return "NoChannel";
    case ErrorCode::UnknownGroup: return "UnknownGroup";
    case ErrorCode::UnknownRecipient: return "UnknownRecipient";
    case ErrorCode::PastStep: return "PastStep";
    case ErrorCode::UnknownParamPath: return "UnknownParamPath";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::SeqGap: return "SeqGap";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
    case ErrorCode::StepNotReached: return "StepNotReached";
    case ErrorCode::MissingTruth: return "MissingTruth";
    case ErrorCode::DuplicatePrediction: return "DuplicatePrediction";
    case ErrorCode::NotApplied: return "NotApplied";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::UnknownRun: return "UnknownRun";
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::RunFinished: return "RunFinished";
  }
  return "Unknown";
}

std::string_view to_string(Action a) {
  static constexpr std::array<std::string_view, 4> names{"offline", "battle", "buy", "sell"};
  return names[index_of(a)];
}

std::string_view to_string(AgentState s) {
  static constexpr std::array<std::string_view, 4> names{"offline", "online", "market", "battle"};
  return names[index_of(s)];
}

std::string_view to_string(ProfileClass c) {
  static constexpr std::array<std::string_view, 5> names{
      "stable_development", "novice", "wealth_elite", "casual", "high_skill"};
  return names[index_of(c)];
}

std::string_view roman(ProfileClass c) {
  static constexpr std::array<std::string_view, 5> names{"I", "II", "III", "IV", "V"};
  return names[index_of(c)];
}

Action parse_action(std::string_view s) {
  for (Action a : kAllActions)
    if (to_string(a) == s) return a;
  throw SimError(ErrorCode::UnknownAction, std::string(s));
}

AgentState parse_state(std::string_view s) {
  for (AgentState st : kAllStates)
    if (to_string(st) == s) return st;
  throw SimError(ErrorCode::InvalidValue, "unknown agent state '" + std::string(s) + "'");
}

ProfileClass parse_class(std::string_view s) {
  for (ProfileClass c : kAllClasses)
    if (to_string(c) == s || roman(c) == s) return c;
  throw SimError(ErrorCode::InvalidValue, "unknown profile class '" + std::string(s) + "'");
}

void validate(const PlayerProfile& p) {
  auto unit = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
      throw SimError(ErrorCode::InvalidValue,
                     std::string(name) + " out of [0,1] for uid " + std::to_string(p.uid));
  };
  unit(p.skill, "skill");
  unit(p.frustration_tolerance, "frustration_tolerance");
  unit(p.spend_propensity, "spend_propensity");
  unit(p.activeness, "activeness");
  unit(p.habit_informal_trade, "habit_informal_trade");
  if (p.session_length_mean < 1)
    throw SimError(ErrorCode::InvalidValue,
                   "session_length_mean < 1 for uid " + std::to_string(p.uid));
}

std::string to_string(const Account& a) {
  switch (a.kind) {
    case AccountKind::Player: return "player:" + std::to_string(a.uid);
    case AccountKind::SystemReserve: return "system_reserve";
    case AccountKind::Burn: return "burn";
  }
  return "?";
}

std::string_view to_string(TransferKind k) {
  switch (k) {
    case TransferKind::BattleReward: return "battle_reward";
    case TransferKind::NpcPurchase: return "npc_purchase";
    case TransferKind::MarketTrade: return "market_trade";
    case TransferKind::Tax: return "tax";
    case TransferKind::InformalTrade: return "informal_trade";
    case TransferKind::Adjustment: return "adjustment";
  }
  return "?";
}

std::string_view to_string(InterventionKind k) {
  switch (k) {
    case InterventionKind::EnableFeature: return "enable_feature";
    case InterventionKind::DisableFeature: return "disable_feature";
    case InterventionKind::SetParam: return "set_param";
    case InterventionKind::BroadcastEvent: return "broadcast_event";
  }
  return "?";
}

InterventionKind parse_intervention_kind(std::string_view s) {
  for (auto k : {InterventionKind::EnableFeature, InterventionKind::DisableFeature,
                 InterventionKind::SetParam, InterventionKind::BroadcastEvent})
    if (to_string(k) == s) return k;
  throw SimError(ErrorCode::InvalidValue, "unknown intervention kind '" + std::string(s) + "'");
}

std::string to_string(const Topic& t) {
  switch (t.kind) {
    case TopicKind::P2P: return "p2p/" + std::to_string(t.id);
    case TopicKind::Group: return "group/" + std::to_string(t.id);
    case TopicKind::Broadcast: return "broadcast";
  }
  return "?";
}

Topic parse_topic(std::string_view s) {
  if (s == "broadcast") return Topic::broadcast();
  auto num = [&](std::string_view rest) -> std::uint32_t {
    if (rest.empty()) throw SimError(ErrorCode::InvalidValue, "bad topic '" + std::string(s) + "'");
    std::uint32_t v = 0;
    for (char c : rest) {
      if (c < '0' || c > '9')
        throw SimError(ErrorCode::InvalidValue, "bad topic '" + std::string(s) + "'");
      v = v * 10 + static_cast<std::uint32_t>(c - '0');
    }
    return v;
  };
  if (s.starts_with("p2p/")) return Topic::p2p(num(s.substr(4)));
  if (s.starts_with("group/")) return Topic::group(num(s.substr(6)));
  throw SimError(ErrorCode::InvalidValue, "bad topic '" + std::string(s) + "'");
}

namespace {
constexpr std::array<std::string_view, std::variant_size_v<EventPayload>> kPayloadKinds{
    "state_transition",   "action_chosen",  "battle_resolved", "trade_executed",
    "informal_trade_executed", "npc_purchase", "intervention_applied", "message_delivered",
    "session_start",      "session_end",    "listing_created", "listing_cancelled",
    "action_rejected",    "policy_failure"};
}  // namespace

std::string_view payload_kind(const EventPayload& p) { return kPayloadKinds[p.index()]; }

bool is_payload_kind(std::string_view kind) {
  for (auto k : kPayloadKinds)
    if (k == kind) return true;
  return false;
}

std::set<AgentState> legal_transitions(AgentState state) {
  switch (state) {
    case AgentState::Offline: return {AgentState::Online};
    case AgentState::Online: return {AgentState::Battle, AgentState::Market, AgentState::Offline};
    case AgentState::Battle: return {AgentState::Online};
    case AgentState::Market: return {AgentState::Online, AgentState::Market};
  }
  return {};
}

bool is_legal_transition(AgentState from, AgentState to) {
  return legal_transitions(from).contains(to);
}

AgentState action_target(Action action, AgentState current) {
  if (current != AgentState::Online && current != AgentState::Market)
    throw SimError(ErrorCode::IllegalDecisionPoint,
                   "cannot decide '" + std::string(to_string(action)) + "' while " +
                       std::string(to_string(current)));
  switch (action) {
    case Action::Offline: return AgentState::Offline;
    case Action::Battle: return AgentState::Battle;
    case Action::Buy:
    case Action::Sell: return AgentState::Market;
  }
  return current;
}

}  // namespace mmosim
