#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace dirac::detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

/// Parses `key = value`. Blank lines and `#` comments yield nullopt.
inline std::optional<std::pair<std::string, std::string>> parse_key_value(std::string_view line) {
  line = trim(line);
  if (line.empty() || line.front() == '#') return std::nullopt;
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) return std::pair{std::string(line), std::string()};
  return std::pair{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1)))};
}

}  // namespace dirac::detail
