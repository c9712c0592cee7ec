#pragma once

#include <cstdio>
#include <string>

namespace hyperfractal {

// Shortest decimal form that round-trips a double exactly.  Every file writer
// goes through this so that identical values always serialise to identical
// bytes.
inline std::string format_double(double value) {
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    double parsed = 0.0;
    std::sscanf(buf, "%lf", &parsed);
    if (parsed == value) break;
  }
  return buf;
}

}  // namespace hyperfractal
