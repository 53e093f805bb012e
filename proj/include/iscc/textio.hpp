#pragma once
// Deterministic text formatting for CSV/JSON artifacts: shortest
// round-trippable decimal form, identical bytes on every run.

#include <charconv>
#include <string>

namespace iscc {

inline std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

}  // namespace iscc
