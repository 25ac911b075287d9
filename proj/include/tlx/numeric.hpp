#pragma once

#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace tlx {

/// Exact non-reduced fraction. Scores and rates are carried this way so the
/// two-decimal rendering never depends on binary floating point.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(const Ratio& a, const Ratio& b) {
    // Cross-multiplication; operands stay far below 2^31 in practice.
    return a.num * b.den == b.num * a.den;
  }
};

/// Renders num/den with two decimals, rounding halves away from zero.
inline std::string format_fixed2(std::int64_t num, std::int64_t den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const bool negative = num < 0;
  const std::int64_t mag = negative ? -num : num;
  // hundredths = round(mag * 100 / den)
  const std::int64_t scaled = mag * 100;
  std::int64_t hundredths = scaled / den;
  if ((scaled % den) * 2 >= den) ++hundredths;
  std::string frac = std::to_string(hundredths % 100);
  if (frac.size() < 2) frac.insert(0, 1, '0');
  std::string out = (negative && hundredths != 0) ? "-" : "";
  out += std::to_string(hundredths / 100);
  out += '.';
  out += frac;
  return out;
}

inline std::string format_fixed2(const Ratio& r) { return format_fixed2(r.num, r.den); }

/// Unbiased integer in [0, bound) from a 64-bit engine. Used instead of
/// std::uniform_int_distribution so seeded output is identical across
/// standard library implementations.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace tlx
