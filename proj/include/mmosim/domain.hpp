#pragma once

// Shared vocabulary of the simulation: states, actions, profiles, accounts,
// transfers and the typed event stream.

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mmosim {

using Uid = std::uint32_t;
using Currency = std::int64_t;
using Seq = std::uint64_t;
using ItemId = std::string;
using ListingId = std::uint64_t;
using InterventionId = std::uint64_t;
using MsgId = std::uint64_t;

enum class ErrorCode {
  IllegalDecisionPoint,
  InvalidConfig,
  PolicyFailure,
  ServiceRejection,
  PoolClosed,
  Timeout,
  MalformedResponse,
  UnknownAction,
  ModelNotFitted,
  InsufficientData,
  InsufficientFunds,
  ChannelDisabled,
  UnknownItem,
  NotOwned,
  NotTradable,
  ListingClosed,
  SelfTrade,
  NoChannel,
  UnknownGroup,
  UnknownRecipient,
  PastStep,
  UnknownParamPath,
  UnknownFeature,
  InvalidValue,
  SeqGap,
  IoFailure,
  VersionMismatch,
  CorruptSnapshot,
  StepNotReached,
  MissingTruth,
  DuplicatePrediction,
  NotApplied,
  InvalidSpec,
  UnknownRun,
  IllegalTransition,
  RunFinished,
};

std::string_view to_string(ErrorCode code);

class SimError : public std::runtime_error {
 public:
  SimError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class Action { Offline, Battle, Buy, Sell };
enum class AgentState { Offline, Online, Market, Battle };
enum class ProfileClass { StableDevelopment, Novice, WealthElite, Casual, HighSkill };

inline constexpr Action kAllActions[] = {Action::Offline, Action::Battle, Action::Buy,
                                         Action::Sell};
inline constexpr AgentState kAllStates[] = {AgentState::Offline, AgentState::Online,
                                            AgentState::Market, AgentState::Battle};
inline constexpr ProfileClass kAllClasses[] = {
    ProfileClass::StableDevelopment, ProfileClass::Novice, ProfileClass::WealthElite,
    ProfileClass::Casual, ProfileClass::HighSkill};
inline constexpr std::size_t kNumActions = 4;
inline constexpr std::size_t kNumStates = 4;
inline constexpr std::size_t kNumClasses = 5;

constexpr std::size_t index_of(Action a) { return static_cast<std::size_t>(a); }
constexpr std::size_t index_of(AgentState s) { return static_cast<std::size_t>(s); }
constexpr std::size_t index_of(ProfileClass c) { return static_cast<std::size_t>(c); }

std::string_view to_string(Action a);
std::string_view to_string(AgentState s);
std::string_view to_string(ProfileClass c);
/// Roman numeral I..V used in reports.
std::string_view roman(ProfileClass c);

Action parse_action(std::string_view s);
AgentState parse_state(std::string_view s);
/// Accepts the lower_snake_case name or the roman numeral.
ProfileClass parse_class(std::string_view s);

struct PlayerProfile {
  Uid uid = 0;
  ProfileClass profile_class = ProfileClass::StableDevelopment;
  double skill = 0.5;
  double frustration_tolerance = 0.5;
  double spend_propensity = 0.5;
  double activeness = 0.5;
  int session_length_mean = 6;
  double habit_informal_trade = 0.0;

  bool operator==(const PlayerProfile&) const = default;
};

/// Throws InvalidValue when a bounded field is out of range.
void validate(const PlayerProfile& p);

struct SimTime {
  std::int64_t abs_step = 0;
  int steps_per_day = 24;

  static SimTime from_abs(std::int64_t abs, int steps_per_day) { return {abs, steps_per_day}; }
  static SimTime from_day(std::int64_t day, int step_in_day, int steps_per_day) {
    return {day * steps_per_day + step_in_day, steps_per_day};
  }
  std::int64_t day() const { return abs_step / steps_per_day; }
  int step_in_day() const { return static_cast<int>(abs_step % steps_per_day); }

  bool operator==(const SimTime&) const = default;
};

enum class AccountKind { Player, SystemReserve, Burn };

struct Account {
  AccountKind kind = AccountKind::SystemReserve;
  Uid uid = 0;

  static Account player(Uid u) { return {AccountKind::Player, u}; }
  static Account reserve() { return {AccountKind::SystemReserve, 0}; }
  static Account burn() { return {AccountKind::Burn, 0}; }
  bool operator==(const Account&) const = default;
};

std::string to_string(const Account& a);

enum class TransferKind { BattleReward, NpcPurchase, MarketTrade, Tax, InformalTrade, Adjustment };
std::string_view to_string(TransferKind k);

struct Transfer {
  Seq seq = 0;
  SimTime step;
  Account from;
  Account to;
  Currency amount = 0;
  TransferKind kind = TransferKind::Adjustment;
};

struct BattleOutcome {
  Uid uid = 0;
  int match_index = 1;
  bool win = false;
  Currency income = 0;
  SimTime step;

  bool operator==(const BattleOutcome&) const = default;
};

struct Channels {
  bool npc_shop = true;
  bool black_market = false;
  bool informal_trade = true;

  bool operator==(const Channels&) const = default;
};

/// Everything a policy sees at a decision point. Serializes to the
/// remote-policy request document.
struct PolicyContext {
  PlayerProfile profile;
  AgentState state = AgentState::Online;
  Currency balance = 0;
  std::vector<BattleOutcome> last_outcomes;
  std::vector<Action> recent_actions;
  std::vector<std::string> broadcasts_pending;
  Channels channels;
  SimTime time;
  int session_steps_remaining = 0;
  int tradable_items = 0;
  Currency cheapest_price = 0;

  bool operator==(const PolicyContext&) const = default;
};

enum class InterventionKind { EnableFeature, DisableFeature, SetParam, BroadcastEvent };
std::string_view to_string(InterventionKind k);
InterventionKind parse_intervention_kind(std::string_view s);

struct Intervention {
  InterventionId intervention_id = 0;
  std::int64_t at_step = 0;
  InterventionKind kind = InterventionKind::BroadcastEvent;
  /// Feature name or dotted parameter path; unused for BroadcastEvent.
  std::string target;
  double value = 0.0;
  std::string body;
  bool announce = true;

  /// Equality ignoring the id, used for idempotent resubmission.
  bool same_content(const Intervention& o) const {
    return at_step == o.at_step && kind == o.kind && target == o.target && value == o.value &&
           body == o.body && announce == o.announce;
  }
  bool operator==(const Intervention&) const = default;
};

enum class TopicKind { P2P, Group, Broadcast };

struct Topic {
  TopicKind kind = TopicKind::Broadcast;
  std::uint32_t id = 0;  // uid for P2P, gid for Group

  static Topic p2p(Uid u) { return {TopicKind::P2P, u}; }
  static Topic group(std::uint32_t gid) { return {TopicKind::Group, gid}; }
  static Topic broadcast() { return {TopicKind::Broadcast, 0}; }
  bool operator==(const Topic&) const = default;
};

std::string to_string(const Topic& t);
Topic parse_topic(std::string_view s);

// Event payloads.
namespace ev {
struct StateTransition {
  AgentState from;
  AgentState to;
  bool operator==(const StateTransition&) const = default;
};
struct ActionChosen {
  Action action;
  std::string rationale;
  PolicyContext context;
  bool operator==(const ActionChosen&) const = default;
};
struct BattleResolved {
  BattleOutcome outcome;
  bool operator==(const BattleResolved&) const = default;
};
struct TradeExecuted {
  ListingId listing_id;
  Uid buyer;
  Uid seller;
  ItemId item;
  Currency price;
  Currency tax;
  bool operator==(const TradeExecuted&) const = default;
};
struct InformalTradeExecuted {
  Uid u1;
  Uid u2;
  ItemId item;
  bool fraud;
  Currency payment;
  bool operator==(const InformalTradeExecuted&) const = default;
};
struct NpcPurchase {
  ItemId item;
  Currency price;
  bool operator==(const NpcPurchase&) const = default;
};
struct InterventionApplied {
  Intervention intervention;
  bool operator==(const InterventionApplied&) const = default;
};
struct MessageDelivered {
  MsgId msg_id;
  Topic topic;
  std::string body;
  bool operator==(const MessageDelivered&) const = default;
};
struct SessionStart {
  int session_length;
  bool operator==(const SessionStart&) const = default;
};
struct SessionEnd {
  bool operator==(const SessionEnd&) const = default;
};
struct ListingCreated {
  ListingId listing_id;
  ItemId item;
  Currency ask_price;
  bool operator==(const ListingCreated&) const = default;
};
struct ListingCancelled {
  ListingId listing_id;
  ItemId item;
  bool operator==(const ListingCancelled&) const = default;
};
struct ActionRejected {
  Action action;
  std::string reason;
  bool operator==(const ActionRejected&) const = default;
};
struct PolicyFailure {
  std::string reason;
  bool operator==(const PolicyFailure&) const = default;
};
}  // namespace ev

using EventPayload =
    std::variant<ev::StateTransition, ev::ActionChosen, ev::BattleResolved, ev::TradeExecuted,
                 ev::InformalTradeExecuted, ev::NpcPurchase, ev::InterventionApplied,
                 ev::MessageDelivered, ev::SessionStart, ev::SessionEnd, ev::ListingCreated,
                 ev::ListingCancelled, ev::ActionRejected, ev::PolicyFailure>;

/// lower_snake_case tag of a payload alternative, e.g. "battle_resolved".
std::string_view payload_kind(const EventPayload& p);
bool is_payload_kind(std::string_view kind);

struct Event {
  Seq seq = 0;
  SimTime step;
  std::optional<Uid> uid;
  EventPayload payload;

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&payload);
  }
  bool operator==(const Event&) const = default;
};

/// Static adjacency of the agent state graph.
std::set<AgentState> legal_transitions(AgentState state);
bool is_legal_transition(AgentState from, AgentState to);

/// State an action leads to. Only valid at decision points (Online, Market).
AgentState action_target(Action action, AgentState current);

}  // namespace mmosim
