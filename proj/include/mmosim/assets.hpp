#pragma once

#include <string_view>
#include <vector>

namespace mmosim {

/// Contents of a data file shipped under assets/ and compiled into the
/// library. Throws InvalidConfig for an unknown name.
std::string_view asset(std::string_view name);
std::vector<std::string_view> asset_names();

}  // namespace mmosim
