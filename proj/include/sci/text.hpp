#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "sci/errors.hpp"

namespace sci {

// Round-trippable decimal rendering (shortest form that preserves the bits
// would be nicer, %.17g is always sufficient).
inline std::string format_double(double v, const char* fmt = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return std::string(buf);
}

inline double parse_double(const std::string& s, const std::string& what) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw io_error("cannot parse number for " + what + ": '" + s + "'");
  return v;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  char* end = nullptr;
  unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw io_error("cannot parse integer for " + what + ": '" + s + "'");
  return static_cast<std::uint64_t>(v);
}

}  // namespace sci
