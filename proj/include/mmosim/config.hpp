#pragma once

// Run configuration. Loaded from a single JSON document carrying a
// `config_version`; see README for the schema.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmosim/battle.hpp"
#include "mmosim/domain.hpp"
#include "mmosim/economy.hpp"
#include "mmosim/policy.hpp"

namespace mmosim {

inline constexpr int kConfigVersion = 1;

struct EconomyConfig {
  double p_fraud = 0.15;
  double habit_decay = 0.7;
  double fraud_aversion = 0.5;
  double loot_drop_prob = 0.5;
  double informal_price_factor = 0.8;
  double ask_price_factor = 0.9;
  double market_buy_preference = 0.7;
  int listing_ttl_steps = 48;
};

struct BridgeConfig {
  bool enabled = false;
  std::string host = "127.0.0.1";
  int port = 1883;
};

struct RunConfig {
  int config_version = kConfigVersion;
  std::string run_id = "run";
  std::uint64_t seed = 42;
  int steps_per_day = 24;
  int total_days = 7;
  std::vector<PlayerProfile> population;
  Currency initial_balance = 1000;
  Currency initial_reserve = 1'000'000'000;
  double tax_rate = 0.05;
  std::map<std::string, bool> feature_flags;
  int battle_duration_steps = 1;
  int max_outbound_inflight = 64;
  /// Keys: "default", "class:<name>", "uid:<n>". Values: "heuristic",
  /// "remote", "replay", "fixed:<action>".
  std::map<std::string, std::string> policy_binding{{"default", "heuristic"}};
  std::string remote_endpoint;
  int remote_deadline_ms = 2000;
  std::string replay_corpus;
  double time_acceleration = 0.0;
  EconomyConfig economy;
  std::optional<double> lambda_win;
  int history_k = 32;
  int context_k = 4;
  int workers = 1;
  int snapshot_every_days = 1;
  std::map<std::uint32_t, std::vector<Uid>> groups;
  std::vector<Intervention> interventions;
  BridgeConfig bridge;

  Catalog catalog;
  HeuristicWeights weights;
  BattleModel battle_model;

  /// Original document (population spec unresolved); the canonical form
  /// hashed into log headers.
  nlohmann::json source;

  std::int64_t total_steps() const {
    return static_cast<std::int64_t>(total_days) * steps_per_day;
  }
  Channels initial_channels() const;
};

/// Parses and validates. Throws SimError(InvalidConfig) with a message
/// naming the offending field.
RunConfig load_config(const nlohmann::json& doc);
RunConfig load_config_file(const std::string& path);
/// "default" and other names of shipped configs resolve to assets.
RunConfig load_named_or_file(const std::string& name_or_path);
nlohmann::json read_config_document(const std::string& path);
nlohmann::json named_or_file_document(const std::string& name_or_path);

std::string config_hash(const RunConfig& cfg);

}  // namespace mmosim
