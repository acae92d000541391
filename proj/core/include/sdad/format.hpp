#pragma once

#include <charconv>
#include <string>

namespace sdad {

// Shortest round-trip decimal form; the same double always prints the same
// bytes, so emitted files are reproducible.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace sdad
