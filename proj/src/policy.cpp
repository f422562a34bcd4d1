#include "mmosim/policy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mmosim/assets.hpp"
#include "mmosim/serialize.hpp"

namespace mmosim {

HeuristicWeights HeuristicWeights::from_json(const nlohmann::json& j) {
  HeuristicWeights w;
  try {
    w.version = j.value("version", "");
    const auto& base = j.at("base_weight");
    for (ProfileClass c : kAllClasses) {
      const auto& row = base.at(std::string(to_string(c)));
      for (Action a : kAllActions) w.base[index_of(c)][index_of(a)] = row.at(std::string(to_string(a))).get<double>();
    }
    const auto& b = j.at("beta");
    w.loss_buy = b.at("loss_buy").get<double>();
    w.frustration_offline = b.at("frustration_offline").get<double>();
    w.session_over_offline = b.at("session_over_offline").get<double>();
    w.poor_battle = b.at("poor_battle").get<double>();
    w.surplus_sell = b.at("surplus_sell").get<double>();
    w.temperature = j.value("temperature", 1.0);
    if (j.contains("reserve_floor") && !j.at("reserve_floor").is_null())
      w.reserve_floor = j.at("reserve_floor").get<Currency>();
  } catch (const nlohmann::json::exception& e) {
    throw SimError(ErrorCode::InvalidConfig, std::string("policy weights: ") + e.what());
  }
  if (w.temperature < 0) throw SimError(ErrorCode::InvalidConfig, "temperature must be >= 0");
  return w;
}

nlohmann::json HeuristicWeights::to_json() const {
  nlohmann::json base = nlohmann::json::object();
  for (ProfileClass c : kAllClasses) {
    nlohmann::json row = nlohmann::json::object();
    for (Action a : kAllActions) row[std::string(to_string(a))] = this->base[index_of(c)][index_of(a)];
    base[std::string(to_string(c))] = row;
  }
  nlohmann::json j{{"version", version},
                   {"base_weight", base},
                   {"beta",
                    {{"loss_buy", loss_buy},
                     {"frustration_offline", frustration_offline},
                     {"session_over_offline", session_over_offline},
                     {"poor_battle", poor_battle},
                     {"surplus_sell", surplus_sell}}},
                   {"temperature", temperature}};
  j["reserve_floor"] = reserve_floor ? nlohmann::json(*reserve_floor) : nlohmann::json(nullptr);
  return j;
}

const HeuristicWeights& HeuristicWeights::defaults() {
  static const HeuristicWeights w = from_json(nlohmann::json::parse(asset("policy_weights.json")));
  return w;
}

int loss_streak(const PolicyContext& ctx) {
  int n = 0;
  for (auto it = ctx.last_outcomes.rbegin(); it != ctx.last_outcomes.rend() && !it->win; ++it) ++n;
  return n;
}

namespace {

struct ScoreTerms {
  ActionScores base{};
  double loss_buy = 0, frustration = 0, session_over = 0, poor = 0, surplus = 0;
};

ScoreTerms score_terms(const PolicyContext& ctx, const HeuristicWeights& w) {
  ScoreTerms t;
  t.base = w.base[index_of(ctx.profile.profile_class)];
  const bool last_loss = !ctx.last_outcomes.empty() && !ctx.last_outcomes.back().win;
  const Currency floor = w.reserve_floor.value_or(ctx.cheapest_price);
  t.loss_buy = w.loss_buy * loss_streak(ctx) * ctx.profile.spend_propensity;
  t.frustration = last_loss ? w.frustration_offline * (1.0 - ctx.profile.frustration_tolerance) : 0.0;
  t.session_over = ctx.session_steps_remaining <= 0 ? w.session_over_offline : 0.0;
  t.poor = ctx.balance < floor ? w.poor_battle : 0.0;
  t.surplus = ctx.tradable_items > 0 ? w.surplus_sell : 0.0;
  return t;
}

ActionScores total(const ScoreTerms& t) {
  ActionScores s = t.base;
  s[index_of(Action::Buy)] += t.loss_buy;
  s[index_of(Action::Offline)] += t.frustration + t.session_over;
  s[index_of(Action::Battle)] += t.poor;
  s[index_of(Action::Sell)] += t.surplus;
  return s;
}

std::string rationale_for(Action a, const ScoreTerms& t) {
  struct Term {
    double value;
    const char* text;
  };
  std::vector<Term> terms{{t.base[index_of(a)], "habitual preference"}};
  switch (a) {
    case Action::Offline:
      terms.push_back({t.frustration, "frustrated by the last defeat"});
      terms.push_back({t.session_over, "session time is used up"});
      break;
    case Action::Battle: terms.push_back({t.poor, "low on funds, need match income"}); break;
    case Action::Buy: terms.push_back({t.loss_buy, "losing streak, better gear needed"}); break;
    case Action::Sell: terms.push_back({t.surplus, "holding surplus tradable items"}); break;
  }
  const auto best = std::max_element(terms.begin(), terms.end(),
                                     [](const Term& x, const Term& y) { return x.value < y.value; });
  return std::string(to_string(a)) + ": " + best->text;
}

}  // namespace

ActionScores heuristic_score(const PolicyContext& ctx, const HeuristicWeights& w) {
  return total(score_terms(ctx, w));
}

ActionMask valid_actions(const PolicyContext& ctx) {
  ActionMask m{};
  m[index_of(Action::Offline)] = true;
  m[index_of(Action::Battle)] = true;
  m[index_of(Action::Buy)] = ctx.channels.npc_shop || ctx.channels.black_market;
  m[index_of(Action::Sell)] =
      ctx.tradable_items > 0 && (ctx.channels.black_market || ctx.channels.informal_trade);
  return m;
}

std::array<double, kNumActions> action_probabilities(const PolicyContext& ctx,
                                                     const HeuristicWeights& w) {
  const ActionScores s = heuristic_score(ctx, w);
  const ActionMask m = valid_actions(ctx);
  std::array<double, kNumActions> p{};
  double best = -INFINITY;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < kNumActions; ++i)
    if (m[i] && s[i] > best) {
      best = s[i];
      best_i = i;
    }
  if (w.temperature <= 0.0) {
    p[best_i] = 1.0;
    return p;
  }
  double z = 0;
  for (std::size_t i = 0; i < kNumActions; ++i) {
    p[i] = m[i] ? std::exp((s[i] - best) / w.temperature) : 0.0;
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

std::optional<bool> Policy::session_start(const PolicyContext&) { return std::nullopt; }

ActionDecision HeuristicPolicy::decide(const PolicyContext& ctx, RngStream& rng) {
  action_target(Action::Offline, ctx.state);
  const auto p = action_probabilities(ctx, weights_);
  const double u = rng.uniform();
  double acc = 0;
  std::size_t chosen = kNumActions;
  for (std::size_t i = 0; i < kNumActions; ++i) {
    if (p[i] <= 0) continue;
    acc += p[i];
    chosen = i;
    if (u < acc) break;
  }
  const Action a = kAllActions[chosen];
  return ActionDecision{a, rationale_for(a, score_terms(ctx, weights_)), 0.0};
}

ActionDecision FixedPolicy::decide(const PolicyContext& ctx, RngStream&) {
  action_target(action_, ctx.state);
  const ActionMask m = valid_actions(ctx);
  Action a = action_;
  if (!m[index_of(a)])
    for (Action alt : kAllActions)
      if (m[index_of(alt)]) {
        a = alt;
        break;
      }
  return ActionDecision{a, std::string(to_string(a)) + ": fixed policy", 0.0};
}

ReplayPolicy::ReplayPolicy(const std::vector<TrajectoryRecord>& corpus) {
  for (const auto& r : corpus) table_[{r.uid, r.t}] = r;
}

const TrajectoryRecord& ReplayPolicy::lookup(const PolicyContext& ctx) const {
  auto it = table_.find({ctx.profile.uid, ctx.time.abs_step});
  if (it == table_.end())
    throw SimError(ErrorCode::MissingTruth, "no recorded action for uid " +
                                                std::to_string(ctx.profile.uid) + " at step " +
                                                std::to_string(ctx.time.abs_step));
  return it->second;
}

ActionDecision ReplayPolicy::decide(const PolicyContext& ctx, RngStream&) {
  action_target(Action::Offline, ctx.state);
  const Action a = lookup(ctx).action;
  return ActionDecision{a, std::string(to_string(a)) + ": replayed", 0.0};
}

// A failed roll is recorded as an Offline decision taken while offline; a
// successful one leaves the agent's first online decision at the same step.
std::optional<bool> ReplayPolicy::session_start(const PolicyContext& ctx) {
  return lookup(ctx).context.state != AgentState::Offline;
}

ActionDecision parse_remote_response(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw SimError(ErrorCode::MalformedResponse, e.what());
  }
  if (!j.is_object() || !j.contains("action") || !j.at("action").is_string())
    throw SimError(ErrorCode::MalformedResponse, "response lacks a string 'action'");
  ActionDecision d;
  d.action = parse_action(j.at("action").get<std::string>());
  if (j.contains("rationale") && j.at("rationale").is_string())
    d.rationale = j.at("rationale").get<std::string>();
  return d;
}

ActionDecision RemotePolicy::decide(const PolicyContext& ctx, RngStream&) {
  action_target(Action::Offline, ctx.state);
  return remote_decide(endpoint_, pool_, ctx);
}

}  // namespace mmosim
