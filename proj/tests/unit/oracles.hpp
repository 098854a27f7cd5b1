#pragma once

// Test-only reference routes, independent of the library's evaluation paths.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cstdint>
#include <random>

namespace oracle {

using HighPrecision = boost::multiprecision::cpp_bin_float_100;

inline HighPrecision dist_to_even(const HighPrecision& y) {
  HighPrecision r = fmod(abs(y), HighPrecision(2));
  return r <= 1 ? r : HighPrecision(2) - r;
}

/// Direct partial sum through term `last` in ~330-bit arithmetic. The
/// argument is kept mod 2 after each multiplication by b; for double-valued x
/// this stays exact because the reduced value needs at most ~64 bits.
inline HighPrecision series_partial_sum(double alpha, std::int64_t base, const HighPrecision& x, int last) {
  HighPrecision sum = 0;
  HighPrecision arg = fmod(abs(x), HighPrecision(2));
  const HighPrecision b = base;
  const HighPrecision ratio = pow(b, -HighPrecision(alpha));
  HighPrecision weight = 1;
  for (int k = 0; k <= last; ++k) {
    sum += weight * dist_to_even(arg);
    weight *= ratio;
    arg = fmod(arg * b, HighPrecision(2));
  }
  return sum;
}

/// Smallest K with b^{-(K+1) alpha} / (1 - b^{-alpha}) <= tol, by enumeration.
inline int depth_for(double alpha, std::int64_t base, double tol) {
  const HighPrecision b = base;
  const HighPrecision a = alpha;
  const HighPrecision denom = 1 - pow(b, -a);
  int k = 0;
  while (pow(b, -a * (k + 1)) / denom > tol) ++k;
  return k;
}

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace oracle
