// Shortest round-trip decimal formatting for doubles, so emitted files are
// byte-reproducible and parse back to the exact same bits.
#ifndef SEMWT_TEXTIO_HPP
#define SEMWT_TEXTIO_HPP

#include <charconv>
#include <cstdio>
#include <string>

#include "semwt/errors.hpp"

namespace semwt {

inline std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Hexfloat form for checkpoints; round-trips bit-exactly.
inline std::string format_double_hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return std::string(buf);
}

inline double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw IoError("trailing characters in number: " + s);
    return v;
  } catch (const std::invalid_argument&) {
    throw IoError("not a number: " + s);
  } catch (const std::out_of_range&) {
    throw IoError("number out of range: " + s);
  }
}

}  // namespace semwt

#endif  // SEMWT_TEXTIO_HPP
