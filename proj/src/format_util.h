#ifndef LRSCONFLATE_SRC_FORMAT_UTIL_H_
#define LRSCONFLATE_SRC_FORMAT_UTIL_H_

#include <string>

#include <fmt/format.h>

namespace lrsconflate {

// Fixed-point with `digits` decimals; never prints a negative zero.
inline std::string FormatFixed(double v, int digits = 6) {
  std::string s = fmt::format("{:.{}f}", v, digits);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) {
    s.erase(0, 1);
  }
  return s;
}

}  // namespace lrsconflate

#endif  // LRSCONFLATE_SRC_FORMAT_UTIL_H_
