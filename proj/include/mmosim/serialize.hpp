#pragma once

// JSON (de)serialization of domain types. Field names are lower_snake_case;
// nlohmann::json keeps object keys sorted, so dump() output is canonical.

#include <string>

#include "json.hpp"
#include "mmosim/domain.hpp"

namespace mmosim {

using json = nlohmann::json;

void to_json(json& j, const PlayerProfile& p);
void from_json(const json& j, PlayerProfile& p);
void to_json(json& j, const SimTime& t);
void to_json(json& j, const BattleOutcome& o);
void to_json(json& j, const Channels& c);
void from_json(const json& j, Channels& c);
void to_json(json& j, const Intervention& iv);
void from_json(const json& j, Intervention& iv);
void to_json(json& j, const Event& e);

/// PolicyContext in remote-policy wire format (also the corpus context record).
json context_to_json(const PolicyContext& ctx, Uid uid);
PolicyContext context_from_json(const json& j, int steps_per_day);

BattleOutcome outcome_from_json(const json& j, int steps_per_day);
Event event_from_json(const json& j, int steps_per_day);

/// One line, no trailing newline.
std::string event_to_line(const Event& e);
Event event_from_line(const std::string& line, int steps_per_day);

}  // namespace mmosim
