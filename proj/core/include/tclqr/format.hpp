#pragma once

#include <cstdio>
#include <string>

namespace tclqr {

// Round-trip exact, locale independent; used everywhere a double lands in a
// text artifact so reruns stay byte-identical.
inline std::string formatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace tclqr
