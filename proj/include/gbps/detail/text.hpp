#pragma once

#include <cstdio>
#include <string>

namespace gbps::detail {

// Floats in reports and error messages are serialized with 12 significant
// digits; reports rely on this being deterministic for byte-stable output.
inline std::string format_g12(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

inline std::string quoted(const std::string& s) { return "'" + s + "'"; }

}  // namespace gbps::detail
