#include "mmosim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "mmosim/battle.hpp"
#include "mmosim/datagen.hpp"
#include "mmosim/mqtt_bridge.hpp"
#include "mmosim/serialize.hpp"

namespace mmosim {

using nlohmann::json;

SimTime map_time(double wall_elapsed_s, const RunConfig& cfg) {
  if (cfg.time_acceleration <= 0)
    throw SimError(ErrorCode::InvalidValue, "time_acceleration must be > 0 to map wall time");
  const double raw = std::floor(std::max(0.0, wall_elapsed_s) / cfg.time_acceleration);
  const auto last = static_cast<double>(cfg.total_steps() - 1);
  return SimTime::from_abs(static_cast<std::int64_t>(std::min(raw, last)), cfg.steps_per_day);
}

namespace {

std::map<Uid, Currency> initial_balances(const RunConfig& cfg) {
  std::map<Uid, Currency> m;
  for (const auto& p : cfg.population) m[p.uid] = cfg.initial_balance;
  return m;
}

std::vector<Uid> uids_of(const RunConfig& cfg) {
  std::vector<Uid> out;
  for (const auto& p : cfg.population) out.push_back(p.uid);
  return out;
}

template <typename T>
void push_bounded(std::deque<T>& d, T v, std::size_t k) {
  d.push_back(std::move(v));
  while (d.size() > k) d.pop_front();
}

}  // namespace

Simulation::Simulation(RunConfig cfg)
    : cfg_(std::move(cfg)),
      ledger_(cfg_.initial_reserve, initial_balances(cfg_)),
      economy_(cfg_.catalog, uids_of(cfg_)),
      bus_(uids_of(cfg_), cfg_.groups),
      pool_(std::make_unique<OutboundPool>(static_cast<std::size_t>(cfg_.max_outbound_inflight))) {
  world_.channels = cfg_.initial_channels();
  world_.tax_rate = cfg_.tax_rate;
  world_.p_fraud = cfg_.economy.p_fraud;
  world_.habit_decay = cfg_.economy.habit_decay;
  world_.lambda_win = cfg_.lambda_win;
  if (world_.channels.black_market) world_.black_market_since = 0;

  for (const auto& p : cfg_.population) {
    validate(p);
    AgentRuntime a;
    a.profile = p;
    agents_.emplace(p.uid, std::move(a));
    Streams s;
    for (auto purpose : {StreamPurpose::Session, StreamPurpose::Policy, StreamPurpose::Battle,
                         StreamPurpose::Economy, StreamPurpose::Generator, StreamPurpose::Fraud})
      s[purpose] = RngStream(cfg_.seed, p.uid, purpose);
    rng_.emplace(p.uid, s);
  }
  for (const auto& iv : cfg_.interventions) timeline_.schedule(iv, 0, economy_.catalog());
  init_policies();
  if (cfg_.bridge.enabled) bus_.set_bridge(make_mqtt_bridge(cfg_.bridge, cfg_.run_id, *pool_));
}

Simulation::~Simulation() { pool_->close(); }

void Simulation::init_policies() {
  heuristic_ = std::make_shared<HeuristicPolicy>(cfg_.weights);
  std::shared_ptr<Policy> replay, remote;
  auto make = [&](const std::string& kind) -> std::shared_ptr<Policy> {
    if (kind == "heuristic") return heuristic_;
    if (kind.starts_with("fixed:")) return std::make_shared<FixedPolicy>(parse_action(kind.substr(6)));
    if (kind == "remote") {
      if (!remote) {
        if (cfg_.remote_endpoint.empty())
          throw SimError(ErrorCode::InvalidConfig, "remote policy bound but remote_policy.endpoint unset");
        remote = std::make_shared<RemotePolicy>(
            RemoteEndpoint::parse(cfg_.remote_endpoint, cfg_.remote_deadline_ms), *pool_);
      }
      return remote;
    }
    if (kind == "replay") {
      if (!replay) {
        std::ifstream in(cfg_.replay_corpus);
        if (!in) throw SimError(ErrorCode::IoFailure, "cannot open replay corpus '" + cfg_.replay_corpus + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        replay = std::make_shared<ReplayPolicy>(trajectories_from_text(ss.str(), cfg_.steps_per_day));
      }
      return replay;
    }
    throw SimError(ErrorCode::InvalidConfig, "unknown policy kind '" + kind + "'");
  };
  for (const auto& [uid, a] : agents_) {
    std::string kind = cfg_.policy_binding.at("default");
    if (auto it = cfg_.policy_binding.find("class:" + std::string(to_string(a.profile.profile_class)));
        it != cfg_.policy_binding.end())
      kind = it->second;
    else if (auto r = cfg_.policy_binding.find("class:" + std::string(roman(a.profile.profile_class)));
             r != cfg_.policy_binding.end())
      kind = r->second;
    if (auto it = cfg_.policy_binding.find("uid:" + std::to_string(uid)); it != cfg_.policy_binding.end())
      kind = it->second;
    bound_[uid] = make(kind);
  }
}

void Simulation::bind_policy(Uid uid, std::shared_ptr<Policy> policy) {
  if (!agents_.contains(uid)) throw SimError(ErrorCode::UnknownRecipient, "no agent " + std::to_string(uid));
  bound_[uid] = std::move(policy);
}

Policy& Simulation::policy_for(Uid uid) { return *bound_.at(uid); }

const AgentRuntime& Simulation::agent(Uid uid) const {
  auto it = agents_.find(uid);
  if (it == agents_.end()) throw SimError(ErrorCode::UnknownRecipient, "no agent " + std::to_string(uid));
  return it->second;
}

InterventionId Simulation::schedule(const Intervention& iv) {
  return timeline_.schedule(iv, step_, economy_.catalog());
}

Currency Simulation::shop_floor_price() const {
  std::optional<Currency> best;
  for (const auto& it : economy_.catalog().items())
    if (it.category != ItemCategory::Loot) best = best ? std::min(*best, it.npc_price) : it.npc_price;
  return best.value_or(economy_.catalog().cheapest_price());
}

PolicyContext Simulation::context_for(Uid uid) const {
  const AgentRuntime& a = agent(uid);
  PolicyContext ctx;
  ctx.profile = a.profile;
  ctx.state = a.state;
  ctx.balance = ledger_.player_balance(uid);
  ctx.last_outcomes.assign(a.last_outcomes.begin(), a.last_outcomes.end());
  ctx.recent_actions.assign(a.recent_actions.begin(), a.recent_actions.end());
  ctx.broadcasts_pending = a.inbox;
  ctx.channels = world_.channels;
  ctx.time = SimTime::from_abs(step_, cfg_.steps_per_day);
  ctx.session_steps_remaining = a.session_steps_remaining;
  ctx.tradable_items = economy_.tradable_count(uid);
  ctx.cheapest_price = shop_floor_price();
  return ctx;
}

void Simulation::emit(std::vector<Event>& out, std::optional<Uid> uid, EventPayload payload) {
  Event e{next_seq_++, SimTime::from_abs(step_, cfg_.steps_per_day), uid, std::move(payload)};
  if (uid) push_bounded(agents_.at(*uid).history, e, static_cast<std::size_t>(cfg_.history_k));
  out.push_back(std::move(e));
}

void Simulation::transition(std::vector<Event>& out, AgentRuntime& a, AgentState to) {
  if (!is_legal_transition(a.state, to))
    throw SimError(ErrorCode::IllegalTransition, std::string(to_string(a.state)) + " -> " +
                                                     std::string(to_string(to)));
  emit(out, a.profile.uid, ev::StateTransition{a.state, to});
  a.state = to;
}

std::vector<Event> Simulation::advance(std::int64_t n) {
  if (finished()) throw SimError(ErrorCode::RunFinished, "run already at step " + std::to_string(step_));
  std::vector<Event> out;
  for (std::int64_t i = 0; i < n && !finished(); ++i) step_once(out);
  return out;
}

std::size_t Simulation::run_steps(std::int64_t n) {
  if (finished()) throw SimError(ErrorCode::RunFinished, "run already at step " + std::to_string(step_));
  std::size_t count = 0;
  std::vector<Event> buf;
  for (std::int64_t i = 0; i < n && !finished(); ++i) {
    buf.clear();
    step_once(buf);
    count += buf.size();
  }
  return count;
}

void Simulation::settle_battle(std::vector<Event>& out, AgentRuntime& a) {
  const Uid uid = a.profile.uid;
  auto& streams = rng_.at(uid);
  const SimTime now = SimTime::from_abs(step_, cfg_.steps_per_day);
  BattleOutcome o = resolve_match(cfg_.battle_model, a.profile, a.pending_task->match_index,
                                  streams[StreamPurpose::Battle], now, world_.lambda_win);
  o.income = std::min(o.income, ledger_.reserve());
  if (o.income > 0)
    ledger_.transfer(now, Account::reserve(), Account::player(uid), o.income, TransferKind::BattleReward);
  emit(out, uid, ev::BattleResolved{o});
  push_bounded(a.last_outcomes, o, static_cast<std::size_t>(cfg_.context_k));
  a.pending_task.reset();
  transition(out, a, AgentState::Online);
  if (o.win && streams[StreamPurpose::Generator].bernoulli(cfg_.economy.loot_drop_prob)) {
    const auto loot = economy_.catalog().ids_in(ItemCategory::Loot);
    if (!loot.empty()) {
      const auto pick = streams[StreamPurpose::Generator].uniform_int(0, static_cast<std::int64_t>(loot.size()) - 1);
      economy_.grant(uid, loot[static_cast<std::size_t>(pick)]);
    }
  }
}

void Simulation::roll_session(std::vector<Event>& out, AgentRuntime& a) {
  const Uid uid = a.profile.uid;
  auto& rng = rng_.at(uid)[StreamPurpose::Session];
  const PolicyContext ctx = context_for(uid);
  const double u = rng.uniform();
  const bool started = policy_for(uid).session_start(ctx).value_or(u < a.profile.activeness);
  if (!started) {
    a.last_rationale = "session roll: stays offline";
    push_bounded(a.recent_actions, Action::Offline, static_cast<std::size_t>(cfg_.context_k));
    emit(out, uid, ev::ActionChosen{Action::Offline, a.last_rationale, ctx});
    return;
  }
  const int mean = std::max(1, a.profile.session_length_mean);
  const auto len = static_cast<int>(rng.uniform_int(std::max(1, mean / 2), mean + mean / 2));
  a.session_steps_remaining = len;
  emit(out, uid, ev::SessionStart{len});
  transition(out, a, AgentState::Online);
}

void Simulation::deliver(std::vector<Event>& out, AgentRuntime& a) {
  for (auto& m : bus_.drain(a.profile.uid, step_)) {
    a.inbox.push_back(m.body);
    emit(out, a.profile.uid, ev::MessageDelivered{m.msg_id, m.topic, std::move(m.body)});
  }
}

ActionDecision Simulation::plan(AgentRuntime& a, const PolicyContext& ctx,
                                std::optional<std::string>& failure) {
  auto& rng = rng_.at(a.profile.uid)[StreamPurpose::Policy];
  Policy& p = policy_for(a.profile.uid);
  const auto t0 = std::chrono::steady_clock::now();
  ActionDecision d;
  try {
    d = p.decide(ctx, rng);
  } catch (const SimError& e) {
    if (e.code() == ErrorCode::MissingTruth) throw;
    failure = e.what();
    d = heuristic_->decide(ctx, rng);
    d.rationale += " (fallback)";
  }
  d.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return d;
}

void Simulation::execute(std::vector<Event>& out, AgentRuntime& a, const ActionDecision& d) {
  switch (d.action) {
    case Action::Offline:
      if (a.state == AgentState::Market) transition(out, a, AgentState::Online);
      transition(out, a, AgentState::Offline);
      a.session_steps_remaining = 0;
      emit(out, a.profile.uid, ev::SessionEnd{});
      break;
    case Action::Battle:
      if (a.state == AgentState::Market) transition(out, a, AgentState::Online);
      if (a.pending_task)
        throw SimError(ErrorCode::IllegalTransition, "agent " + std::to_string(a.profile.uid) +
                                                         " already has a pending task");
      a.pending_task = PendingTask{step_ + cfg_.battle_duration_steps, ++a.match_count_this_season};
      transition(out, a, AgentState::Battle);
      break;
    case Action::Buy:
      transition(out, a, AgentState::Market);
      execute_buy(out, a);
      break;
    case Action::Sell:
      transition(out, a, AgentState::Market);
      execute_sell(out, a);
      break;
  }
}

void Simulation::execute_buy(std::vector<Event>& out, AgentRuntime& a) {
  const Uid uid = a.profile.uid;
  auto& rng = rng_.at(uid)[StreamPurpose::Economy];
  const SimTime now = SimTime::from_abs(step_, cfg_.steps_per_day);
  const Currency balance = ledger_.player_balance(uid);
  const double u = rng.uniform();
  if (world_.channels.black_market && u < cfg_.economy.market_buy_preference) {
    std::optional<ListingId> best;
    Currency best_price = 0;
    for (const auto& [id, l] : economy_.listings()) {
      if (l.status != ListingStatus::Open || l.seller == uid || l.ask_price > balance) continue;
      if (!best || l.ask_price < best_price) {
        best = id;
        best_price = l.ask_price;
      }
    }
    if (best) {
      emit(out, uid, economy_.market_buy(ledger_, world_.channels, uid, *best, world_.tax_rate, now));
      return;
    }
  }
  if (!world_.channels.npc_shop) {
    emit(out, uid, ev::ActionRejected{Action::Buy, "no affordable listing and npc shop closed"});
    return;
  }
  std::vector<ItemId> affordable;
  for (const auto& it : economy_.catalog().items())
    if (it.category != ItemCategory::Loot && it.npc_price <= balance) affordable.push_back(it.item_id);
  if (affordable.empty()) {
    emit(out, uid, ev::ActionRejected{Action::Buy, "insufficient funds for any shop item"});
    return;
  }
  const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(affordable.size()) - 1);
  emit(out, uid, economy_.npc_buy(ledger_, world_.channels, uid, affordable[static_cast<std::size_t>(pick)], now));
}

void Simulation::execute_sell(std::vector<Event>& out, AgentRuntime& a) {
  const Uid uid = a.profile.uid;
  auto& rng = rng_.at(uid)[StreamPurpose::Economy];
  const SimTime now = SimTime::from_abs(step_, cfg_.steps_per_day);
  const auto item = economy_.first_tradable(uid);
  if (!item) {
    emit(out, uid, ev::ActionRejected{Action::Sell, "nothing tradable to sell"});
    return;
  }
  if (!world_.channels.black_market && !world_.channels.informal_trade) {
    emit(out, uid, ev::ActionRejected{Action::Sell, "no trade channel open"});
    return;
  }
  std::int64_t days = 0;
  if (world_.black_market_since) days = (step_ - *world_.black_market_since) / cfg_.steps_per_day;
  const SellChannel ch = choose_sell_channel(a.profile, world_.channels, days, world_.habit_decay, rng,
                                             a.frauds_suffered, cfg_.economy.fraud_aversion);
  const Currency npc_price = economy_.catalog().at(*item).npc_price;
  if (ch == SellChannel::BlackMarket) {
    const Currency ask = std::max<Currency>(1, std::llround(npc_price * cfg_.economy.ask_price_factor));
    emit(out, uid, economy_.market_sell(world_.channels, uid, *item, ask, now));
    return;
  }
  std::vector<Uid> partners;
  for (const auto& [other, b] : agents_)
    if (other != uid && (b.state == AgentState::Online || b.state == AgentState::Market)) partners.push_back(other);
  if (partners.empty()) {
    emit(out, uid, ev::ActionRejected{Action::Sell, "no counterparty online"});
    return;
  }
  const Uid u2 = partners[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(partners.size()) - 1))];
  const Currency payment = std::min(ledger_.player_balance(u2),
                                    static_cast<Currency>(std::llround(npc_price * cfg_.economy.informal_price_factor)));
  auto trade = economy_.informal_trade(ledger_, world_.channels, uid, u2, *item, payment, world_.p_fraud,
                                       rng_.at(uid)[StreamPurpose::Fraud], now);
  if (trade.fraud) ++a.frauds_suffered;
  emit(out, uid, trade);
}

void Simulation::step_once(std::vector<Event>& all) {
  std::vector<Event> out;
  const SimTime now = SimTime::from_abs(step_, cfg_.steps_per_day);

  for (const auto& iv : timeline_.due(step_)) {
    apply_intervention(iv, step_, world_, economy_.catalog());
    emit(out, std::nullopt, ev::InterventionApplied{iv});
    if (iv.kind == InterventionKind::BroadcastEvent || iv.announce)
      bus_.publish(Topic::broadcast(), std::nullopt, describe(iv), step_);
  }

  if (step_ >= cfg_.economy.listing_ttl_steps)
    for (ListingId id : economy_.open_listings_older_than(step_ - cfg_.economy.listing_ttl_steps)) {
      const Uid seller = economy_.listing(id).seller;
      emit(out, seller, economy_.market_cancel(seller, id));
    }

  for (auto& [uid, a] : agents_)
    if (a.state != AgentState::Offline) deliver(out, a);

  for (auto& [uid, a] : agents_)
    if (a.pending_task && a.pending_task->completes_at <= step_) settle_battle(out, a);

  if (now.step_in_day() == 0)
    for (auto& [uid, a] : agents_)
      if (a.state == AgentState::Offline && !a.pending_task) {
        roll_session(out, a);
        if (a.state != AgentState::Offline) deliver(out, a);
      }

  // Planning reads a frozen view of the world; decisions are applied after.
  struct Slot {
    AgentRuntime* agent;
    PolicyContext ctx;
    ActionDecision decision;
    std::optional<std::string> failure;
    std::exception_ptr error;
  };
  std::vector<Slot> slots;
  for (auto& [uid, a] : agents_)
    if ((a.state == AgentState::Online || a.state == AgentState::Market) && !a.pending_task)
      slots.push_back(Slot{&a, context_for(uid), {}, std::nullopt, nullptr});

  auto work = [&](Slot& s) {
    try {
      s.decision = plan(*s.agent, s.ctx, s.failure);
    } catch (...) {
      s.error = std::current_exception();
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg_.workers), slots.size());
  if (workers <= 1) {
    for (auto& s : slots) work(s);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w)
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < slots.size(); i = next++) work(slots[i]);
      });
  }

  for (auto& s : slots) {
    if (s.error) std::rethrow_exception(s.error);
    AgentRuntime& a = *s.agent;
    if (s.failure) emit(out, a.profile.uid, ev::PolicyFailure{*s.failure});
    a.last_rationale = s.decision.rationale;
    a.inbox.clear();
    push_bounded(a.recent_actions, s.decision.action, static_cast<std::size_t>(cfg_.context_k));
    emit(out, a.profile.uid, ev::ActionChosen{s.decision.action, s.decision.rationale, s.ctx});
    execute(out, a, s.decision);
  }

  for (auto& [uid, a] : agents_)
    if (a.state != AgentState::Offline) --a.session_steps_remaining;

  ++step_;
  if (sink_) sink_(out, step_ - 1);
  all.insert(all.end(), std::make_move_iterator(out.begin()), std::make_move_iterator(out.end()));
}

json Simulation::snapshot() const {
  json agents = json::array();
  for (const auto& [uid, a] : agents_) {
    json j{{"uid", uid},
           {"state", to_string(a.state)},
           {"session_steps_remaining", a.session_steps_remaining},
           {"match_count_this_season", a.match_count_this_season},
           {"frauds_suffered", a.frauds_suffered},
           {"inbox", a.inbox},
           {"last_rationale", a.last_rationale}};
    j["pending_task"] = a.pending_task ? json{{"completes_at", a.pending_task->completes_at},
                                              {"match_index", a.pending_task->match_index}}
                                       : json(nullptr);
    json outcomes = json::array();
    for (const auto& o : a.last_outcomes) outcomes.push_back(o);
    j["last_outcomes"] = outcomes;
    json actions = json::array();
    for (Action x : a.recent_actions) actions.push_back(to_string(x));
    j["recent_actions"] = actions;
    json hist = json::array();
    for (const auto& e : a.history) hist.push_back(e);
    j["history"] = hist;
    std::vector<std::uint64_t> counters;
    for (const auto& s : rng_.at(uid).s) counters.push_back(s.counter());
    j["rng"] = counters;
    agents.push_back(std::move(j));
  }
  json players = json::object();
  for (const auto& [uid, bal] : ledger_.player_balances()) players[std::to_string(uid)] = bal;
  return json{{"format", "mmosim.snapshot"},
              {"snapshot_version", kSnapshotVersion},
              {"config_version", cfg_.config_version},
              {"config", cfg_.source},
              {"step", step_},
              {"next_seq", next_seq_},
              {"agents", agents},
              {"ledger",
               {{"reserve", ledger_.reserve()},
                {"burn", ledger_.burn()},
                {"players", players},
                {"initial_total", ledger_.initial_total()},
                {"next_seq", ledger_.next_seq()}}},
              {"economy", economy_.to_json()},
              {"bus", bus_.to_json()},
              {"world", world_.to_json()},
              {"timeline", timeline_.to_json()}};
}

std::unique_ptr<Simulation> Simulation::restore(const json& snap) {
  if (!snap.is_object() || snap.value("format", "") != "mmosim.snapshot")
    throw SimError(ErrorCode::CorruptSnapshot, "not a snapshot document");
  if (snap.value("snapshot_version", 0) != kSnapshotVersion ||
      snap.value("config_version", 0) != kConfigVersion)
    throw SimError(ErrorCode::VersionMismatch,
                   "snapshot config_version " + std::to_string(snap.value("config_version", 0)) +
                       ", expected " + std::to_string(kConfigVersion));
  try {
    auto sim = std::make_unique<Simulation>(load_config(snap.at("config")));
    const int spd = sim->cfg_.steps_per_day;
    sim->step_ = snap.at("step").get<std::int64_t>();
    sim->next_seq_ = snap.at("next_seq").get<Seq>();
    for (const auto& j : snap.at("agents")) {
      const Uid uid = j.at("uid").get<Uid>();
      AgentRuntime& a = sim->agents_.at(uid);
      a.state = parse_state(j.at("state").get<std::string>());
      a.session_steps_remaining = j.at("session_steps_remaining").get<int>();
      a.match_count_this_season = j.at("match_count_this_season").get<int>();
      a.frauds_suffered = j.at("frauds_suffered").get<int>();
      a.inbox = j.at("inbox").get<std::vector<std::string>>();
      a.last_rationale = j.at("last_rationale").get<std::string>();
      a.pending_task.reset();
      if (!j.at("pending_task").is_null())
        a.pending_task = PendingTask{j.at("pending_task").at("completes_at").get<std::int64_t>(),
                                     j.at("pending_task").at("match_index").get<int>()};
      a.last_outcomes.clear();
      for (const auto& o : j.at("last_outcomes")) a.last_outcomes.push_back(outcome_from_json(o, spd));
      a.recent_actions.clear();
      for (const auto& x : j.at("recent_actions")) a.recent_actions.push_back(parse_action(x.get<std::string>()));
      a.history.clear();
      for (const auto& e : j.at("history")) a.history.push_back(event_from_json(e, spd));
      const auto counters = j.at("rng").get<std::vector<std::uint64_t>>();
      auto& streams = sim->rng_.at(uid).s;
      if (counters.size() != streams.size()) throw SimError(ErrorCode::CorruptSnapshot, "rng counters");
      for (std::size_t i = 0; i < streams.size(); ++i) streams[i].set_counter(counters[i]);
    }
    const auto& l = snap.at("ledger");
    std::map<Uid, Currency> players;
    for (const auto& [k, v] : l.at("players").items()) players[static_cast<Uid>(std::stoul(k))] = v.get<Currency>();
    sim->ledger_ = Ledger::restore(l.at("reserve").get<Currency>(), l.at("burn").get<Currency>(),
                                   std::move(players), l.at("initial_total").get<Currency>(),
                                   l.at("next_seq").get<Seq>());
    sim->economy_ = Economy::from_json(snap.at("economy"));
    sim->bus_ = MessageBus::from_json(snap.at("bus"));
    if (sim->cfg_.bridge.enabled)
      sim->bus_.set_bridge(make_mqtt_bridge(sim->cfg_.bridge, sim->cfg_.run_id, *sim->pool_));
    sim->world_ = WorldParams::from_json(snap.at("world"));
    sim->timeline_ = InterventionTimeline::from_json(snap.at("timeline"));
    return sim;
  } catch (const SimError& e) {
    if (e.code() == ErrorCode::VersionMismatch || e.code() == ErrorCode::InvalidConfig) throw;
    throw SimError(ErrorCode::CorruptSnapshot, e.what());
  } catch (const json::exception& e) {
    throw SimError(ErrorCode::CorruptSnapshot, e.what());
  } catch (const std::out_of_range& e) {
    throw SimError(ErrorCode::CorruptSnapshot, e.what());
  }
}

}  // namespace mmosim
