#pragma once

#include <charconv>
#include <string>

namespace taxrisk {

// Canonical 17-significant-digit decimal form, locale-independent. Used by
// every artifact whose bytes must be stable across save/load cycles.
inline std::string g17(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace taxrisk
