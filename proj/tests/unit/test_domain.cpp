#include "helpers.hpp"
#include "mmosim/domain.hpp"
#include "mmosim/economy.hpp"
#include "mmosim/serialize.hpp"

using namespace mmosim;

TEST_SUITE("domain") {

TEST_CASE("legal transitions") {
  using S = AgentState;
  CHECK(legal_transitions(S::Offline) == std::set<S>{S::Online});
  CHECK(legal_transitions(S::Online) == std::set<S>{S::Battle, S::Market, S::Offline});
  CHECK(legal_transitions(S::Battle) == std::set<S>{S::Online});
  CHECK(legal_transitions(S::Market) == std::set<S>{S::Online, S::Market});
}

TEST_CASE("every online action maps onto a legal edge") {
  for (Action a : kAllActions) {
    const AgentState to = action_target(a, AgentState::Online);
    CHECK(is_legal_transition(AgentState::Online, to));
  }
}

TEST_CASE("action targets") {
  CHECK(action_target(Action::Battle, AgentState::Online) == AgentState::Battle);
  CHECK(action_target(Action::Buy, AgentState::Market) == AgentState::Market);
  CHECK(action_target(Action::Sell, AgentState::Online) == AgentState::Market);
  CHECK(action_target(Action::Offline, AgentState::Online) == AgentState::Offline);
  try {
    action_target(Action::Offline, AgentState::Battle);
    FAIL("expected IllegalDecisionPoint");
  } catch (const SimError& e) {
    CHECK(e.code() == ErrorCode::IllegalDecisionPoint);
  }
  CHECK_THROWS_AS(action_target(Action::Buy, AgentState::Offline), SimError);
}

TEST_CASE("round half up tax table") {
  CHECK(round_half_up_tax(100, 0.05) == 5);
  CHECK(round_half_up_tax(99, 0.05) == 5);  // 4.95
  CHECK(round_half_up_tax(90, 0.05) == 5);  // 4.5
  CHECK(round_half_up_tax(89, 0.05) == 4);  // 4.45
  CHECK(round_half_up_tax(10, 0.05) == 1);  // 0.5
  CHECK(round_half_up_tax(9, 0.05) == 0);   // 0.45
  CHECK(round_half_up_tax(1000, 0.0) == 0);
  CHECK(round_half_up_tax(7, 0.5) == 4);    // 3.5
}

TEST_CASE("sim time arithmetic") {
  const SimTime t = SimTime::from_day(3, 5, 24);
  CHECK(t.abs_step == 77);
  CHECK(t.day() == 3);
  CHECK(t.step_in_day() == 5);
}

TEST_CASE("profile validation") {
  PlayerProfile p;
  CHECK_NOTHROW(validate(p));
  p.skill = 1.5;
  CHECK_THROWS_AS(validate(p), SimError);
  p.skill = 0.5;
  p.session_length_mean = 0;
  CHECK_THROWS_AS(validate(p), SimError);
}

TEST_CASE("names round-trip") {
  for (Action a : kAllActions) CHECK(parse_action(to_string(a)) == a);
  for (AgentState s : kAllStates) CHECK(parse_state(to_string(s)) == s);
  for (ProfileClass c : kAllClasses) {
    CHECK(parse_class(to_string(c)) == c);
    CHECK(parse_class(roman(c)) == c);
  }
  CHECK(roman(ProfileClass::WealthElite) == "III");
  CHECK_THROWS_AS(parse_action("dance"), SimError);
}

TEST_CASE("event serialization round-trips every payload kind") {
  PolicyContext ctx;
  ctx.profile.uid = 3;
  ctx.balance = 10;
  ctx.time = SimTime::from_abs(5, 24);
  ctx.recent_actions = {Action::Battle};
  const std::vector<EventPayload> payloads = {
      ev::StateTransition{AgentState::Offline, AgentState::Online},
      ev::ActionChosen{Action::Sell, "why", ctx},
      ev::BattleResolved{BattleOutcome{3, 2, true, 150, SimTime::from_abs(5, 24)}},
      ev::TradeExecuted{1, 3, 4, "medkit", 100, 5},
      ev::InformalTradeExecuted{3, 4, "rifle", true, 0},
      ev::NpcPurchase{"ammo", 25},
      ev::InterventionApplied{Intervention{1, 5, InterventionKind::EnableFeature, "black_market_enabled", 0, "", true}},
      ev::MessageDelivered{9, Topic::group(2), "hello"},
      ev::SessionStart{6},
      ev::SessionEnd{},
      ev::ListingCreated{4, "rifle", 90},
      ev::ListingCancelled{4, "rifle"},
      ev::ActionRejected{Action::Buy, "broke"},
      ev::PolicyFailure{"Timeout: slow"},
  };
  Seq seq = 1;
  for (const auto& p : payloads) {
    Event e{seq++, SimTime::from_abs(5, 24), Uid{3}, p};
    const std::string line = event_to_line(e);
    CHECK(line.find('\n') == std::string::npos);
    const Event back = event_from_line(line, 24);
    CHECK(back == e);
    CHECK(is_payload_kind(payload_kind(p)));
  }
}

}  // TEST_SUITE
