#pragma once

#include <string_view>

namespace adae {

inline constexpr std::string_view kToolName = "adae";
inline constexpr std::string_view kToolVersion = "0.1.0";

}  // namespace adae
