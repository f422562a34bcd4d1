#pragma once

// Scheduled and live mutations of a running world: feature flags, a small
// set of mutable parameters, and broadcast announcements.

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmosim/domain.hpp"
#include "mmosim/economy.hpp"

namespace mmosim {

inline constexpr const char* kFeatureBlackMarket = "black_market_enabled";
inline constexpr const char* kFeatureInformalTrade = "informal_trade_enabled";
inline constexpr const char* kFeatureNpcShop = "npc_shop_enabled";

/// The mutable part of a run's configuration.
struct WorldParams {
  Channels channels;
  double tax_rate = 0.05;
  double p_fraud = 0.15;
  double habit_decay = 0.7;
  std::optional<double> lambda_win;
  /// First step the black market was open, for habit decay.
  std::optional<std::int64_t> black_market_since;

  bool operator==(const WorldParams&) const = default;
  nlohmann::json to_json() const;
  static WorldParams from_json(const nlohmann::json& j);
};

bool is_known_feature(std::string_view name);
bool is_mutable_param(std::string_view path, const Catalog& catalog);

/// Checks feature names, parameter paths and value bounds. Throws
/// UnknownFeature, UnknownParamPath or InvalidValue.
void validate_intervention(const Intervention& iv, const Catalog& catalog);

/// Applies one intervention to the world. Validation is assumed done.
void apply_intervention(const Intervention& iv, std::int64_t step, WorldParams& world,
                        Catalog& catalog);

/// Human-readable announcement text for the broadcast.
std::string describe(const Intervention& iv);

/// The run's intervention schedule. schedule() may be called from a control
/// thread while the engine reads due() at step boundaries.
class InterventionTimeline {
 public:
  InterventionTimeline() = default;
  InterventionTimeline(const InterventionTimeline& o);
  InterventionTimeline& operator=(const InterventionTimeline& o);

  /// Stores the intervention; returns its id. Resubmitting identical content
  /// returns the existing id. An id of 0 means "assign one".
  InterventionId schedule(Intervention iv, std::int64_t current_step, const Catalog& catalog);

  /// Interventions due exactly at `step`, in id order.
  std::vector<Intervention> due(std::int64_t step) const;
  std::vector<Intervention> all() const;
  std::optional<Intervention> find(InterventionId id) const;

  nlohmann::json to_json() const;
  static InterventionTimeline from_json(const nlohmann::json& j);

 private:
  mutable std::mutex mu_;
  std::map<InterventionId, Intervention> items_;
  InterventionId next_id_ = 1;
};

}  // namespace mmosim
