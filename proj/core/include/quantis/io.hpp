#ifndef QUANTIS_IO_HPP
#define QUANTIS_IO_HPP

#include <cstdio>
#include <string>

#include "quantis/errors.hpp"

namespace quantis {

// 17 significant digits: enough for a decimal round trip to reproduce the
// exact IEEE double, so cache files are bit-stable.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& tok, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    throw ConfigError(where + ": expected a number, got '" + tok + "'");
  }
  return v;
}

inline long long parse_int(const std::string& tok, const std::string& where) {
  char* end = nullptr;
  const long long v = std::strtoll(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0') {
    throw ConfigError(where + ": expected an integer, got '" + tok + "'");
  }
  return v;
}

}  // namespace quantis

#endif
