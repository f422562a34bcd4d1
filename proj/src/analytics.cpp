#include "mmosim/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "mmosim/serialize.hpp"

namespace mmosim {

using nlohmann::json;

double gini(std::vector<Currency> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  long double sum = 0, weighted = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    // sum_{i,j} |x_i - x_j| = 2 * sum_i (2i - n + 1) x_(i) over sorted values
    weighted += (2.0L * static_cast<long double>(i) - n + 1.0L) * values[i];
  }
  if (sum == 0) return 0.0;
  return static_cast<double>(2.0L * weighted / (2.0L * n * sum));
}

std::size_t wealth_bin(Currency balance) {
  if (balance < 1) return 0;
  std::size_t k = 0;
  while (k < kWealthBins - 2 && balance >= (Currency{1} << (k + 1))) ++k;
  return k + 1;
}

std::array<Currency, kWealthBins> wealth_bin_edges() {
  std::array<Currency, kWealthBins> e{};
  e[0] = 0;
  for (std::size_t k = 1; k < kWealthBins; ++k) e[k] = Currency{1} << (k - 1);
  return e;
}

std::optional<double> TradeCounts::informal_share() const {
  const auto total = informal + market();
  if (total == 0) return std::nullopt;
  return static_cast<double>(informal) / static_cast<double>(total);
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json trades_json(const TradeCounts& t) {
  return json{{"informal", t.informal},
              {"black_market", t.black_market},
              {"npc", t.npc},
              {"informal_share", opt(t.informal_share())}};
}

void count_trade(TradeCounts& c, const Event& e) {
  if (e.as<ev::InformalTradeExecuted>()) ++c.informal;
  else if (e.as<ev::TradeExecuted>()) ++c.black_market;
  else if (e.as<ev::NpcPurchase>()) ++c.npc;
}

}  // namespace

json StatsFrame::to_json() const {
  json hist = json::array();
  const auto edges = wealth_bin_edges();
  for (std::size_t i = 0; i < kWealthBins; ++i) hist.push_back(json{{"lo", edges[i]}, {"count", wealth_histogram[i]}});
  json rank = json::object();
  for (ProfileClass c : kAllClasses) rank[std::string(roman(c))] = rank_distribution[index_of(c)];
  json states = json::object();
  for (AgentState s : kAllStates) states[std::string(to_string(s))] = agents_by_state[index_of(s)];
  json counts = json::object(), shares = json::object();
  for (Action a : kAllActions) {
    counts[std::string(to_string(a))] = action_counts[index_of(a)];
    shares[std::string(to_string(a))] = action_shares ? json((*action_shares)[index_of(a)]) : json(nullptr);
  }
  return json{{"schema_version", 1},
              {"step", step},
              {"wealth_histogram", hist},
              {"gini", gini},
              {"rank_distribution", rank},
              {"resource_consumption", {{"npc", npc_spend}, {"tax", tax_burned}}},
              {"activeness", activeness},
              {"agents_by_state", states},
              {"money_supply", {{"players_total", players_total}, {"reserve", reserve}, {"burn", burn}, {"total", total}}},
              {"action_counts", counts},
              {"action_shares", shares},
              {"window", window},
              {"window_trades", trades_json(window_trades)},
              {"informal_trade_share", opt(informal_trade_share)}};
}

LogReplay::LogReplay(const RunConfig& cfg) : reserve_(cfg.initial_reserve) {
  for (const auto& p : cfg.population) {
    balances_[p.uid] = cfg.initial_balance;
    states_[p.uid] = AgentState::Offline;
    classes_[p.uid] = p.profile_class;
  }
  initial_total_ = reserve_ + cfg.initial_balance * static_cast<Currency>(cfg.population.size());
}

void LogReplay::apply(const Event& e) {
  if (const auto* t = e.as<ev::StateTransition>()) {
    states_.at(*e.uid) = t->to;
  } else if (const auto* b = e.as<ev::BattleResolved>()) {
    balances_.at(b->outcome.uid) += b->outcome.income;
    reserve_ -= b->outcome.income;
  } else if (const auto* n = e.as<ev::NpcPurchase>()) {
    balances_.at(*e.uid) -= n->price;
    reserve_ += n->price;
    npc_spend_ += n->price;
  } else if (const auto* m = e.as<ev::TradeExecuted>()) {
    balances_.at(m->buyer) -= m->price;
    balances_.at(m->seller) += m->price - m->tax;
    burn_ += m->tax;
  } else if (const auto* i = e.as<ev::InformalTradeExecuted>()) {
    if (!i->fraud && i->payment > 0) {
      balances_.at(i->u2) -= i->payment;
      balances_.at(i->u1) += i->payment;
    }
  }
}

namespace {

StatsFrame frame_from(const LogReplay& r, std::int64_t step, std::int64_t window,
                      const std::array<int, kNumActions>& last_step_actions, const TradeCounts& trades) {
  StatsFrame f;
  f.step = step;
  std::vector<Currency> values;
  std::vector<std::pair<Currency, Uid>> ranked;
  for (const auto& [uid, bal] : r.balances()) {
    values.push_back(bal);
    ranked.emplace_back(bal, uid);
    ++f.wealth_histogram[wealth_bin(bal)];
    f.players_total += bal;
  }
  f.gini = gini(values);
  std::sort(ranked.begin(), ranked.end());
  const std::size_t n = ranked.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t q = std::min<std::size_t>(4, i * 5 / n);
    ++f.rank_distribution[index_of(r.classes().at(ranked[i].second))][q];
  }
  int online = 0;
  for (const auto& [uid, s] : r.states()) {
    ++f.agents_by_state[index_of(s)];
    online += s != AgentState::Offline;
  }
  f.activeness = n ? static_cast<double>(online) / static_cast<double>(n) : 0.0;
  f.npc_spend = r.npc_spend();
  f.tax_burned = r.tax_burned();
  f.reserve = r.reserve();
  f.burn = r.burn();
  f.total = f.players_total + f.reserve + f.burn;
  f.action_counts = last_step_actions;
  int total_actions = 0;
  for (int c : last_step_actions) total_actions += c;
  if (total_actions > 0) {
    std::array<double, kNumActions> s{};
    for (std::size_t i = 0; i < kNumActions; ++i) s[i] = static_cast<double>(last_step_actions[i]) / total_actions;
    f.action_shares = s;
  }
  f.window = window;
  f.window_trades = trades;
  f.informal_trade_share = trades.informal_share();
  return f;
}

std::array<int, kNumActions> actions_at(const std::vector<Event>& log, std::size_t begin, std::int64_t step) {
  std::array<int, kNumActions> c{};
  for (std::size_t i = begin; i < log.size() && log[i].step.abs_step == step; ++i)
    if (const auto* a = log[i].as<ev::ActionChosen>()) ++c[index_of(a->action)];
  return c;
}

}  // namespace

TradeCounts count_trades(const std::vector<Event>& log, std::int64_t from_step, std::int64_t to_step) {
  TradeCounts c;
  for (const auto& e : log)
    if (e.step.abs_step >= from_step && e.step.abs_step < to_step) count_trade(c, e);
  return c;
}

StatsFrame compute_frame(const RunConfig& cfg, const std::vector<Event>& log, std::int64_t steps_done,
                         std::int64_t step, std::int64_t window) {
  if (step < 0 || step > steps_done)
    throw SimError(ErrorCode::StepNotReached, "step " + std::to_string(step) + " not reached (log covers " +
                                                  std::to_string(steps_done) + " steps)");
  if (window < 1) throw SimError(ErrorCode::InvalidValue, "window must be >= 1");
  LogReplay r(cfg);
  std::size_t i = 0, prev_begin = log.size();
  TradeCounts trades;
  for (; i < log.size() && log[i].step.abs_step < step; ++i) {
    if (log[i].step.abs_step == step - 1 && prev_begin == log.size()) prev_begin = i;
    r.apply(log[i]);
    if (log[i].step.abs_step >= step - window) count_trade(trades, log[i]);
  }
  const auto acts = step > 0 ? actions_at(log, prev_begin, step - 1) : std::array<int, kNumActions>{};
  return frame_from(r, step, window, acts, trades);
}

std::vector<StatsFrame> daily_frames(const RunConfig& cfg, const std::vector<Event>& log,
                                     std::int64_t steps_done, std::int64_t window) {
  std::vector<StatsFrame> out;
  const int spd = cfg.steps_per_day;
  LogReplay r(cfg);
  std::size_t i = 0;
  for (std::int64_t day = 0; day * spd <= steps_done; ++day) {
    const std::int64_t step = day * spd;
    std::size_t prev_begin = log.size();
    for (; i < log.size() && log[i].step.abs_step < step; ++i) r.apply(log[i]);
    for (std::size_t j = i; j > 0 && log[j - 1].step.abs_step == step - 1; --j) prev_begin = j - 1;
    const auto acts = step > 0 ? actions_at(log, prev_begin, step - 1) : std::array<int, kNumActions>{};
    out.push_back(frame_from(r, step, window, acts, count_trades(log, step - window, step)));
  }
  return out;
}

// Accuracy harness.

json AccuracyReport::to_json() const {
  json recall = json::object(), dist = json::object(), conf = json::object();
  for (Action a : kAllActions) {
    const auto k = std::string(to_string(a));
    recall[k] = opt(per_class_recall[index_of(a)]);
    dist[k] = class_distribution[index_of(a)];
    json row = json::object();
    for (Action p : kAllActions) row[std::string(to_string(p))] = confusion[index_of(a)][index_of(p)];
    conf[k] = row;
  }
  return json{{"schema_version", 1},      {"accuracy", accuracy},       {"total", total},
              {"correct", correct},       {"per_class_recall", recall}, {"confusion", conf},
              {"class_distribution", dist}};
}

AccuracyReport stepwise_accuracy(const std::vector<Prediction>& predictions,
                                 const std::vector<TrajectoryRecord>& truth) {
  std::map<std::pair<Uid, std::int64_t>, Action> t;
  for (const auto& r : truth) t[{r.uid, r.t}] = r.action;
  std::set<std::pair<Uid, std::int64_t>> seen;
  AccuracyReport rep;
  for (const auto& p : predictions) {
    const std::pair key{p.uid, p.t};
    auto it = t.find(key);
    if (it == t.end())
      throw SimError(ErrorCode::MissingTruth, "no truth for uid " + std::to_string(p.uid) + " at t=" +
                                                  std::to_string(p.t));
    if (!seen.insert(key).second)
      throw SimError(ErrorCode::DuplicatePrediction, "uid " + std::to_string(p.uid) + " at t=" +
                                                         std::to_string(p.t));
    ++rep.confusion[index_of(it->second)][index_of(p.action)];
    rep.correct += it->second == p.action;
  }
  // Unpredicted decision points count against accuracy.
  for (const auto& [key, a] : t) ++rep.class_distribution[index_of(a)];
  rep.total = t.size();
  rep.accuracy = rep.total ? static_cast<double>(rep.correct) / static_cast<double>(rep.total) : 0.0;
  for (std::size_t i = 0; i < kNumActions; ++i)
    if (rep.class_distribution[i] > 0)
      rep.per_class_recall[i] = static_cast<double>(rep.confusion[i][i]) / static_cast<double>(rep.class_distribution[i]);
  return rep;
}

std::vector<Prediction> predict_corpus(Policy& policy, const std::vector<TrajectoryRecord>& corpus,
                                       std::uint64_t seed) {
  std::map<Uid, RngStream> streams;
  std::vector<Prediction> out;
  out.reserve(corpus.size());
  for (const auto& r : corpus) {
    auto it = streams.find(r.uid);
    if (it == streams.end()) it = streams.emplace(r.uid, RngStream(seed, r.uid, StreamPurpose::Policy)).first;
    Action a = Action::Offline;
    if (r.context.state == AgentState::Offline) {
      if (policy.session_start(r.context).value_or(false)) {
        PolicyContext online = r.context;
        online.state = AgentState::Online;
        a = policy.decide(online, it->second).action;
      }
    } else {
      a = policy.decide(r.context, it->second).action;
    }
    out.push_back(Prediction{r.uid, r.t, a});
  }
  return out;
}

std::vector<Prediction> majority_predictions(const std::vector<TrajectoryRecord>& corpus) {
  std::array<std::size_t, kNumActions> c{};
  for (const auto& r : corpus) ++c[index_of(r.action)];
  const auto best = static_cast<Action>(std::max_element(c.begin(), c.end()) - c.begin());
  std::vector<Prediction> out;
  for (const auto& r : corpus) out.push_back(Prediction{r.uid, r.t, best});
  return out;
}

std::string predictions_to_text(const std::vector<Prediction>& preds) {
  std::string out = json{{"format", "mmosim.predictions"}, {"version", 1}}.dump() + "\n";
  for (const auto& p : preds) out += json{{"uid", p.uid}, {"t", p.t}, {"action", to_string(p.action)}}.dump() + "\n";
  return out;
}

std::vector<Prediction> predictions_from_text(const std::string& text) {
  std::vector<Prediction> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SimError(ErrorCode::InvalidValue, std::string("prediction record: ") + e.what());
    }
    if (j.contains("format")) continue;
    out.push_back(Prediction{j.at("uid").get<Uid>(), j.at("t").get<std::int64_t>(),
                             parse_action(j.at("action").get<std::string>())});
  }
  return out;
}

// Intervention report.

json InterventionReport::to_json() const {
  json s = json::array();
  for (const auto& p : series) {
    json r = trades_json(p.trades);
    r["day"] = p.day;
    s.push_back(r);
  }
  return json{{"schema_version", 1},
              {"intervention_id", intervention_id},
              {"at_step", at_step},
              {"window", window},
              {"settle", settle},
              {"pre", trades_json(pre)},
              {"post", trades_json(post)},
              {"pre_share", opt(pre.informal_share())},
              {"post_share", opt(post.informal_share())},
              {"series", s}};
}

InterventionReport intervention_report(const std::vector<Event>& log, InterventionId id, std::int64_t window,
                                       std::int64_t settle, int steps_per_day, std::int64_t steps_done) {
  std::optional<std::int64_t> at;
  for (const auto& e : log)
    if (const auto* a = e.as<ev::InterventionApplied>(); a && a->intervention.intervention_id == id) {
      at = e.step.abs_step;
      break;
    }
  if (!at) throw SimError(ErrorCode::NotApplied, "intervention " + std::to_string(id) + " not in log");
  InterventionReport rep;
  rep.intervention_id = id;
  rep.at_step = *at;
  rep.window = window;
  rep.settle = settle;
  rep.pre = count_trades(log, *at - window, *at);
  rep.post = count_trades(log, *at + settle, std::min(steps_done, *at + settle + window));
  const std::int64_t days = (steps_done + steps_per_day - 1) / steps_per_day;
  for (std::int64_t d = 0; d < days; ++d)
    rep.series.push_back({d, count_trades(log, d * steps_per_day, (d + 1) * steps_per_day)});
  return rep;
}

}  // namespace mmosim
