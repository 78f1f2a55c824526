#pragma once

#include <string_view>

namespace proxyforge {

inline constexpr std::string_view k_tool_name = "proxyforge";
inline constexpr std::string_view k_tool_version = "0.1.0";

}  // namespace proxyforge
