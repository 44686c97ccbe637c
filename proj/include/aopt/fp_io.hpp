#pragma once

#include <charconv>
#include <cstdio>
#include <string>
#include <system_error>

#include "aopt/common.hpp"

namespace aopt {

/// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw numerical_error("format_double: to_chars failed");
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw format_error("parse_double: bad number '" + s + "'");
  return v;
}

}  // namespace aopt
