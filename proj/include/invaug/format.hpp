#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace invaug {

// 17 significant digits, '.' separator, locale-independent; enough for a
// lossless 64-bit round trip.
inline std::string fmt_double(double v) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace invaug
