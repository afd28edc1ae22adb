#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tenkit/errors.hpp"

namespace tenkit {

using u8 = std::uint8_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

namespace detail {
constexpr u64 kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer; the bit mixer behind both the RNG streams and the
// tally-map bucket hash.
constexpr u64 mix64(u64 z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}
}  // namespace detail

// Product of a dim list in 128-bit arithmetic.  Dims at desk scale keep the
// per-kind entry counts inside u64, but whole-tensor products can exceed it.
inline u128 prod_u128(std::span<const u64> dims) {
  u128 p = 1;
  for (u64 d : dims) {
    if (d != 0 && p > ~u128{0} / d) throw OverflowError("dim product exceeds 128 bits");
    p *= d;
  }
  return p;
}

inline u64 prod_u64_checked(std::span<const u64> dims, const char* what) {
  u128 p = prod_u128(dims);
  if (p > u128{~u64{0}}) throw OverflowError(std::string(what) + " exceeds 64-bit range");
  return static_cast<u64>(p);
}

inline double prod_double(std::span<const u64> dims) {
  double p = 1.0;
  for (u64 d : dims) p *= static_cast<double>(d);
  return p;
}

// llround rounds half away from zero, which is the rounding rule everywhere
// counts are produced from real-valued draws.
inline i64 round_half_away(double v) { return std::llround(v); }

// Shortest decimal that parses back to the same double.
inline std::string format_double_shortest(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Same, but guaranteed to read back as a real (keeps a '.' or exponent).
inline std::string format_value(double v) {
  std::string s = format_double_shortest(v);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

// 17 significant digits: lossless for IEEE double, used by the CSV writer.
inline std::string format_double_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace tenkit
