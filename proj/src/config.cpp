#include "mmosim/config.hpp"

#include <fstream>
#include <sstream>

#include "mmosim/assets.hpp"
#include "mmosim/datagen.hpp"
#include "mmosim/hash.hpp"
#include "mmosim/intervention.hpp"
#include "mmosim/serialize.hpp"

namespace mmosim {

using nlohmann::json;

Channels RunConfig::initial_channels() const {
  Channels c;
  auto flag = [&](const char* name, bool dflt) {
    auto it = feature_flags.find(name);
    return it == feature_flags.end() ? dflt : it->second;
  };
  c.black_market = flag(kFeatureBlackMarket, false);
  c.informal_trade = flag(kFeatureInformalTrade, true);
  c.npc_shop = flag(kFeatureNpcShop, true);
  return c;
}

namespace {

[[noreturn]] void bad(const std::string& what) { throw SimError(ErrorCode::InvalidConfig, what); }

template <typename T>
T get_or(const json& j, const char* key, T dflt) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return dflt;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    bad(std::string(key) + ": " + e.what());
  }
}

void check_binding_value(const std::string& v) {
  if (v == "heuristic" || v == "remote" || v == "replay") return;
  if (v.starts_with("fixed:")) {
    parse_action(v.substr(6));
    return;
  }
  bad("unknown policy kind '" + v + "'");
}

}  // namespace

RunConfig load_config(const json& doc) {
  if (!doc.is_object()) bad("config must be a JSON object");
  RunConfig c;
  c.source = doc;
  c.config_version = get_or(doc, "config_version", 0);
  if (c.config_version != kConfigVersion)
    throw SimError(ErrorCode::VersionMismatch,
                   "config_version " + std::to_string(c.config_version) + ", expected " +
                       std::to_string(kConfigVersion));
  try {
    c.run_id = get_or<std::string>(doc, "run_id", "run");
    c.seed = get_or<std::uint64_t>(doc, "seed", 42);
    c.steps_per_day = get_or(doc, "steps_per_day", 24);
    c.total_days = get_or(doc, "total_days", 7);
    if (c.steps_per_day < 1) bad("steps_per_day must be >= 1");
    if (c.total_days < 1) bad("total_days must be >= 1");
    c.initial_balance = get_or<Currency>(doc, "initial_balance", 1000);
    c.initial_reserve = get_or<Currency>(doc, "initial_reserve", 1'000'000'000);
    if (c.initial_balance < 0 || c.initial_reserve < 0) bad("initial balances must be >= 0");
    c.tax_rate = get_or(doc, "tax_rate", 0.05);
    if (!(c.tax_rate >= 0 && c.tax_rate < 1)) bad("tax_rate must be in [0,1)");
    c.feature_flags = get_or(doc, "feature_flags", std::map<std::string, bool>{});
    for (const auto& [name, on] : c.feature_flags)
      if (!is_known_feature(name)) bad("unknown feature flag '" + name + "'");
    c.battle_duration_steps = get_or(doc, "battle_duration_steps", 1);
    if (c.battle_duration_steps < 1) bad("battle_duration_steps must be >= 1");
    c.max_outbound_inflight = get_or(doc, "max_outbound_inflight", 64);
    if (c.max_outbound_inflight < 1) bad("max_outbound_inflight must be >= 1");
    c.time_acceleration = get_or(doc, "time_acceleration", 0.0);
    if (c.time_acceleration < 0) bad("time_acceleration must be >= 0");
    c.history_k = get_or(doc, "history_k", 32);
    c.context_k = get_or(doc, "context_k", 4);
    if (c.history_k < 1 || c.context_k < 1) bad("history_k and context_k must be >= 1");
    c.workers = get_or(doc, "workers", 1);
    if (c.workers < 1) bad("workers must be >= 1");
    c.snapshot_every_days = get_or(doc, "snapshot_every_days", 1);
    if (c.snapshot_every_days < 1) bad("snapshot_every_days must be >= 1");

    if (doc.contains("policy_binding"))
      c.policy_binding = doc.at("policy_binding").get<std::map<std::string, std::string>>();
    if (!c.policy_binding.contains("default")) c.policy_binding["default"] = "heuristic";
    for (const auto& [key, kind] : c.policy_binding) {
      check_binding_value(kind);
      if (key != "default" && !key.starts_with("class:") && !key.starts_with("uid:"))
        bad("bad policy_binding key '" + key + "'");
      if (key.starts_with("class:")) parse_class(key.substr(6));
    }
    if (doc.contains("remote_policy")) {
      const auto& r = doc.at("remote_policy");
      c.remote_endpoint = get_or<std::string>(r, "endpoint", "");
      c.remote_deadline_ms = get_or(r, "deadline_ms", 2000);
    }
    c.replay_corpus = get_or<std::string>(doc, "replay_corpus", "");

    if (doc.contains("economy")) {
      const auto& e = doc.at("economy");
      c.economy.p_fraud = get_or(e, "p_fraud", c.economy.p_fraud);
      c.economy.habit_decay = get_or(e, "habit_decay", c.economy.habit_decay);
      c.economy.fraud_aversion = get_or(e, "fraud_aversion", c.economy.fraud_aversion);
      c.economy.loot_drop_prob = get_or(e, "loot_drop_prob", c.economy.loot_drop_prob);
      c.economy.informal_price_factor = get_or(e, "informal_price_factor", c.economy.informal_price_factor);
      c.economy.ask_price_factor = get_or(e, "ask_price_factor", c.economy.ask_price_factor);
      c.economy.market_buy_preference = get_or(e, "market_buy_preference", c.economy.market_buy_preference);
      c.economy.listing_ttl_steps = get_or(e, "listing_ttl_steps", c.economy.listing_ttl_steps);
    }
    auto unit = [](double v, const char* n) {
      if (!(v >= 0 && v <= 1)) bad(std::string("economy.") + n + " must be in [0,1]");
    };
    unit(c.economy.p_fraud, "p_fraud");
    unit(c.economy.habit_decay, "habit_decay");
    unit(c.economy.fraud_aversion, "fraud_aversion");
    unit(c.economy.loot_drop_prob, "loot_drop_prob");
    unit(c.economy.market_buy_preference, "market_buy_preference");
    if (c.economy.informal_price_factor < 0 || c.economy.ask_price_factor <= 0)
      bad("economy price factors must be positive");
    if (c.economy.listing_ttl_steps < 1) bad("economy.listing_ttl_steps must be >= 1");

    // Catalog.
    const json catalog = doc.value("catalog", json("default"));
    c.catalog = catalog.is_string() && catalog.get<std::string>() == "default"
                    ? Catalog::from_lines(std::string(asset("catalog.jsonl")))
                    : Catalog::from_json(catalog);

    // Policy weights: the shipped table with an optional merge patch.
    json weights = json::parse(asset("policy_weights.json"));
    if (doc.contains("policy_weights") && doc.at("policy_weights").is_object())
      weights.merge_patch(doc.at("policy_weights"));
    c.weights = HeuristicWeights::from_json(weights);

    // Battle model.
    if (doc.contains("battle")) {
      const auto& b = doc.at("battle");
      if (b.contains("lambda_win") && !b.at("lambda_win").is_null()) {
        c.lambda_win = b.at("lambda_win").get<double>();
        if (*c.lambda_win < 1) bad("battle.lambda_win must be >= 1");
      }
      if (b.contains("model") && b.at("model").is_object())
        c.battle_model = BattleModel::from_json(b.at("model"));
      else
        c.battle_model = default_battle_model();
    } else {
      c.battle_model = default_battle_model();
    }

    // Population.
    const json pop = doc.value("population", json{{"generate", 100}});
    if (pop.is_array()) {
      for (const auto& p : pop) c.population.push_back(p.get<PlayerProfile>());
    } else if (pop.contains("profiles")) {
      for (const auto& p : pop.at("profiles")) c.population.push_back(p.get<PlayerProfile>());
    } else {
      const int n = get_or(pop, "generate", 100);
      const auto pop_seed = get_or<std::uint64_t>(pop, "seed", c.seed);
      const json clusters = pop.value("clusters", json("default"));
      const ClusterTable specs = clusters.is_string() ? default_clusters() : clusters_from_json(clusters);
      c.population = generate_population(specs, n, pop_seed);
      if (pop.contains("habit_informal_trade")) {
        const double h = pop.at("habit_informal_trade").get<double>();
        if (!(h >= 0 && h <= 1)) bad("population.habit_informal_trade must be in [0,1]");
        for (auto& p : c.population) p.habit_informal_trade = h;
      }
    }
    if (c.population.empty()) bad("population is empty");
    std::map<Uid, int> seen;
    for (const auto& p : c.population)
      if (seen[p.uid]++) bad("duplicate uid " + std::to_string(p.uid));

    if (doc.contains("groups"))
      for (const auto& [k, v] : doc.at("groups").items())
        c.groups[static_cast<std::uint32_t>(std::stoul(k))] = v.get<std::vector<Uid>>();
    for (const auto& [gid, members] : c.groups)
      for (Uid u : members)
        if (!seen.contains(u)) bad("group " + std::to_string(gid) + " names unknown uid " + std::to_string(u));

    if (doc.contains("interventions"))
      for (const auto& r : doc.at("interventions")) {
        auto iv = r.get<Intervention>();
        validate_intervention(iv, c.catalog);
        c.interventions.push_back(iv);
      }

    if (doc.contains("bridge")) {
      const auto& b = doc.at("bridge");
      c.bridge.enabled = get_or(b, "enabled", false);
      c.bridge.host = get_or<std::string>(b, "host", "127.0.0.1");
      c.bridge.port = get_or(b, "port", 1883);
    }
  } catch (const SimError& e) {
    if (e.code() == ErrorCode::InvalidConfig || e.code() == ErrorCode::VersionMismatch) throw;
    bad(e.what());
  } catch (const json::exception& e) {
    bad(e.what());
  }
  return c;
}

json read_config_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SimError(ErrorCode::IoFailure, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    bad(path + ": " + e.what());
  }
}

RunConfig load_config_file(const std::string& path) { return load_config(read_config_document(path)); }

json named_or_file_document(const std::string& name_or_path) {
  const std::string asset_name = "config_" + name_or_path + ".json";
  for (auto n : asset_names())
    if (n == asset_name) return json::parse(asset(asset_name));
  return read_config_document(name_or_path);
}

RunConfig load_named_or_file(const std::string& name_or_path) {
  return load_config(named_or_file_document(name_or_path));
}

std::string config_hash(const RunConfig& cfg) { return sha256_hex(cfg.source.dump()); }

}  // namespace mmosim
