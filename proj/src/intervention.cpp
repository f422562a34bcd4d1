#include "mmosim/intervention.hpp"

#include <cmath>
#include <sstream>

#include "mmosim/serialize.hpp"

namespace mmosim {

namespace {
constexpr std::string_view kPricePrefix = "npc_price.";
}

nlohmann::json WorldParams::to_json() const {
  nlohmann::json j{{"channels", channels},
                   {"tax_rate", tax_rate},
                   {"p_fraud", p_fraud},
                   {"habit_decay", habit_decay}};
  j["lambda_win"] = lambda_win ? nlohmann::json(*lambda_win) : nlohmann::json(nullptr);
  j["black_market_since"] =
      black_market_since ? nlohmann::json(*black_market_since) : nlohmann::json(nullptr);
  return j;
}

WorldParams WorldParams::from_json(const nlohmann::json& j) {
  WorldParams w;
  w.channels = j.at("channels").get<Channels>();
  w.tax_rate = j.at("tax_rate").get<double>();
  w.p_fraud = j.at("p_fraud").get<double>();
  w.habit_decay = j.at("habit_decay").get<double>();
  if (!j.at("lambda_win").is_null()) w.lambda_win = j.at("lambda_win").get<double>();
  if (!j.at("black_market_since").is_null())
    w.black_market_since = j.at("black_market_since").get<std::int64_t>();
  return w;
}

bool is_known_feature(std::string_view name) {
  return name == kFeatureBlackMarket || name == kFeatureInformalTrade || name == kFeatureNpcShop;
}

bool is_mutable_param(std::string_view path, const Catalog& catalog) {
  if (path == "tax_rate" || path == "p_fraud" || path == "habit_decay" ||
      path == "battle.lambda_win")
    return true;
  if (path.starts_with(kPricePrefix))
    return catalog.find(std::string(path.substr(kPricePrefix.size()))) != nullptr;
  return false;
}

void validate_intervention(const Intervention& iv, const Catalog& catalog) {
  switch (iv.kind) {
    case InterventionKind::EnableFeature:
    case InterventionKind::DisableFeature:
      if (!is_known_feature(iv.target)) throw SimError(ErrorCode::UnknownFeature, iv.target);
      return;
    case InterventionKind::BroadcastEvent:
      if (iv.body.empty()) throw SimError(ErrorCode::InvalidValue, "broadcast body is empty");
      return;
    case InterventionKind::SetParam: break;
  }
  if (!is_mutable_param(iv.target, catalog)) throw SimError(ErrorCode::UnknownParamPath, iv.target);
  const double v = iv.value;
  auto bad = [&](const char* range) {
    std::ostringstream os;
    os << iv.target << " = " << v << " outside " << range;
    throw SimError(ErrorCode::InvalidValue, os.str());
  };
  if (!std::isfinite(v)) bad("finite values");
  if (iv.target == "tax_rate" && !(v >= 0 && v < 1)) bad("[0,1)");
  if ((iv.target == "p_fraud" || iv.target == "habit_decay") && !(v >= 0 && v <= 1)) bad("[0,1]");
  if (iv.target == "battle.lambda_win" && !(v >= 1)) bad("[1,inf)");
  if (iv.target.starts_with(kPricePrefix) && !(v >= 1 && v == std::floor(v)))
    bad("positive integers");
}

void apply_intervention(const Intervention& iv, std::int64_t step, WorldParams& world,
                        Catalog& catalog) {
  auto set_flag = [&](bool on) {
    if (iv.target == kFeatureBlackMarket) {
      if (on && !world.channels.black_market) world.black_market_since = step;
      if (!on) world.black_market_since.reset();
      world.channels.black_market = on;
    } else if (iv.target == kFeatureInformalTrade) {
      world.channels.informal_trade = on;
    } else if (iv.target == kFeatureNpcShop) {
      world.channels.npc_shop = on;
    }
  };
  switch (iv.kind) {
    case InterventionKind::EnableFeature: set_flag(true); break;
    case InterventionKind::DisableFeature: set_flag(false); break;
    case InterventionKind::BroadcastEvent: break;
    case InterventionKind::SetParam:
      if (iv.target == "tax_rate") world.tax_rate = iv.value;
      else if (iv.target == "p_fraud") world.p_fraud = iv.value;
      else if (iv.target == "habit_decay") world.habit_decay = iv.value;
      else if (iv.target == "battle.lambda_win") world.lambda_win = iv.value;
      else if (iv.target.starts_with(kPricePrefix))
        catalog.set_price(iv.target.substr(kPricePrefix.size()), static_cast<Currency>(iv.value));
      break;
  }
}

std::string describe(const Intervention& iv) {
  std::ostringstream os;
  switch (iv.kind) {
    case InterventionKind::EnableFeature: os << "Now available: " << iv.target; break;
    case InterventionKind::DisableFeature: os << "No longer available: " << iv.target; break;
    case InterventionKind::SetParam: os << "Parameter update: " << iv.target << " = " << iv.value; break;
    case InterventionKind::BroadcastEvent: os << iv.body; break;
  }
  return os.str();
}

InterventionTimeline::InterventionTimeline(const InterventionTimeline& o) { *this = o; }

InterventionTimeline& InterventionTimeline::operator=(const InterventionTimeline& o) {
  if (this == &o) return *this;
  std::scoped_lock lock(mu_, o.mu_);
  items_ = o.items_;
  next_id_ = o.next_id_;
  return *this;
}

InterventionId InterventionTimeline::schedule(Intervention iv, std::int64_t current_step,
                                              const Catalog& catalog) {
  std::lock_guard lock(mu_);
  for (const auto& [id, existing] : items_)
    if ((iv.intervention_id == 0 || iv.intervention_id == id) && existing.same_content(iv))
      return id;
  if (iv.at_step < current_step)
    throw SimError(ErrorCode::PastStep, "step " + std::to_string(iv.at_step) +
                                            " already executed (next step is " +
                                            std::to_string(current_step) + ")");
  validate_intervention(iv, catalog);
  if (iv.intervention_id == 0) {
    iv.intervention_id = next_id_;
  } else if (items_.contains(iv.intervention_id)) {
    throw SimError(ErrorCode::InvalidValue,
                   "intervention id " + std::to_string(iv.intervention_id) + " already used");
  }
  next_id_ = std::max(next_id_, iv.intervention_id + 1);
  items_.emplace(iv.intervention_id, iv);
  return iv.intervention_id;
}

std::vector<Intervention> InterventionTimeline::due(std::int64_t step) const {
  std::lock_guard lock(mu_);
  std::vector<Intervention> out;
  for (const auto& [id, iv] : items_)
    if (iv.at_step == step) out.push_back(iv);
  return out;
}

std::vector<Intervention> InterventionTimeline::all() const {
  std::lock_guard lock(mu_);
  std::vector<Intervention> out;
  for (const auto& [id, iv] : items_) out.push_back(iv);
  return out;
}

std::optional<Intervention> InterventionTimeline::find(InterventionId id) const {
  std::lock_guard lock(mu_);
  auto it = items_.find(id);
  if (it == items_.end()) return std::nullopt;
  return it->second;
}

nlohmann::json InterventionTimeline::to_json() const {
  std::lock_guard lock(mu_);
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [id, iv] : items_) arr.push_back(iv);
  return nlohmann::json{{"items", arr}, {"next_id", next_id_}};
}

InterventionTimeline InterventionTimeline::from_json(const nlohmann::json& j) {
  InterventionTimeline t;
  for (const auto& r : j.at("items")) {
    auto iv = r.get<Intervention>();
    t.items_.emplace(iv.intervention_id, iv);
  }
  t.next_id_ = j.at("next_id").get<InterventionId>();
  return t;
}

}  // namespace mmosim
