#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "mmosim/assets.hpp"
#include "mmosim/config.hpp"

namespace testutil {

using nlohmann::json;

/// Default config with `patch` merged in (RFC 7386).
inline json config_doc(const json& patch = json::object()) {
  json doc = json::parse(mmosim::asset("config_default.json"));
  doc.merge_patch(patch);
  return doc;
}

inline mmosim::RunConfig config(const json& patch = json::object()) {
  return mmosim::load_config(config_doc(patch));
}

inline json profile_json(mmosim::Uid uid, const std::string& cls, double activeness = 1.0) {
  return json{{"uid", uid},
              {"class", cls},
              {"skill", 0.5},
              {"frustration_tolerance", 0.5},
              {"spend_propensity", 0.5},
              {"activeness", activeness},
              {"session_length_mean", 6},
              {"habit_informal_trade", 0.3}};
}

/// Error code thrown by f, or nullopt when it returns normally.
template <typename F>
std::optional<mmosim::ErrorCode> code_of(F&& f) {
  try {
    f();
  } catch (const mmosim::SimError& e) {
    return e.code();
  }
  return std::nullopt;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 gen(std::random_device{}());
  auto p = std::filesystem::temp_directory_path() / ("mmosim_" + tag + "_" + std::to_string(gen()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil
