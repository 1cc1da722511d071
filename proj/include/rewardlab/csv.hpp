#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace rewardlab {

// Shortest round-trip decimal form, '.' separator, locale independent.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

}  // namespace rewardlab
