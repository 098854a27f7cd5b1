#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "holder/curves.hpp"
#include "holder/real.hpp"

namespace holder {

using ScalarMap = std::function<Real(Real)>;
using FieldMap = std::function<Real(const Point&)>;

/// Inclusive range of scale levels; level m has radius scale_base^{-m}.
struct ScaleRange {
  int m_min = 0;
  int m_max = 0;
};

struct OscillationProfile {
  Real center = 0;
  std::int64_t scale_base = 2;
  std::vector<int> levels;
  std::vector<Real> scales;        // r_m, strictly decreasing
  std::vector<Real> oscillations;  // omega_m >= 0
  std::size_t samples_per_scale = 0;
  std::uint64_t seed = 0;
};

/// omega_m = max |f(y) - f(x0)| over sampled y with |y - x0| in
/// (r_{m+1}, r_m]. Each annulus gets x0 +- r_m, the level-m grid points
/// bracketing x0 that fall inside it, and stratified uniform draws for the
/// rest. Evaluation errors are rethrown as EvaluationFailed naming y.
OscillationProfile oscillation_profile(const ScalarMap& f, Real x0, ScaleRange range, std::size_t samples_per_scale,
                                       std::uint64_t seed, std::int64_t scale_base = 2);

struct ExponentEstimate {
  double alpha_hat = 0;
  double r_squared = 0;
  int window_min = 0;
  int window_max = 0;
  std::size_t scales_used = 0;
};

/// Least-squares slope of log omega_m against log r_m after dropping the
/// `drop_coarsest` largest scales and every omega_m < drop_floor. Throws
/// InsufficientScales when fewer than 3 remain.
ExponentEstimate estimate_exponent(const OscillationProfile& p, Real drop_floor, int drop_coarsest = 2);

struct QuotientRow {
  int m = 0;
  Real r = 0;
  Real max_quotient = 0;
};

struct QuotientReport {
  Real s0 = 0;
  std::vector<QuotientRow> rows;
  Real max_quotient = 0;
};

/// Relative offsets sampled at each level: t = 1, 1/2, 1/4, ... while
/// t > 1/scale_base, on both sides of s0.
std::vector<Real> level_fractions(std::int64_t scale_base);

/// Difference quotients |f(c(s)) - f(c(s0))| / |s - s0| for s = s0 +- r_m t.
/// Throws OutOfDomain when a sample would come within 1e-9 of an endpoint.
QuotientReport lipschitz_quotient(const FieldMap& f, const TestCurve& c, Real s0, ScaleRange range,
                                  std::int64_t scale_base = 2);

struct MembershipOptions {
  std::int64_t scale_base = 2;
  int m_max = 12;
  /// Absolute error bound on each value of f. A violation is only reported
  /// when it survives this slack, so FALSE verdicts stay certificates.
  Real evaluation_error = 0;
};

struct MembershipResult {
  /// true: no sampled violation of |f(c(s)) - f(c(s0))| <= n |s - s0|.
  bool member = true;
  std::optional<int> witness_m;
  Real witness_s = 0;
  /// Largest certified quotient seen, (|delta| - 2 err) / |s - s0|.
  Real max_quotient = 0;
  int m_first = 0;
  int m_last = 0;
};

/// Probe centered at the midpoint of each curve domain, over the levels whose
/// radius fits inside [-1/n, 1/n] up to m_max. Throws CurveTooShort.
std::vector<MembershipResult> fn_membership_probe(const FieldMap& f, const std::vector<TestCurve>& curves, int n,
                                                  const MembershipOptions& options = {});

}  // namespace holder
