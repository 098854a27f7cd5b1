#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "holder/error.hpp"
#include "holder/real.hpp"

namespace holder {

/// Distance from x to the nearest even integer. Even, 2-periodic,
/// 1-Lipschitz, with values in [0, 1].
double sawtooth(double x);
Real sawtooth(Real x);

/// Validated (alpha, base) pair for the lacunary sawtooth series
///
///   Phi(x) = sum_{k>=0} base^{-k alpha} sawtooth(base^k x).
///
/// The Hoelder constant C and the increment constant M are computed once on
/// construction.
class SeriesParams {
 public:
  double alpha() const noexcept { return alpha_; }
  std::int64_t base() const noexcept { return base_; }
  double holder_constant() const noexcept { return holder_c_; }
  double increment_constant() const noexcept { return increment_m_; }
  /// Upper bound of Phi: sum of all weights, 1 / (1 - base^{-alpha}).
  double series_bound() const noexcept { return series_bound_; }

  friend bool operator==(const SeriesParams&, const SeriesParams&) = default;

 private:
  friend SeriesParams validate_params(double alpha, std::int64_t base);
  SeriesParams() = default;

  double alpha_ = 0.0;
  std::int64_t base_ = 0;
  double holder_c_ = 0.0;
  double increment_m_ = 0.0;
  double series_bound_ = 0.0;
};

/// Throws AlphaOutOfRange, BaseNotEven or GapConditionViolated
/// (base^{1-alpha} must exceed 2 strictly).
SeriesParams validate_params(double alpha, std::int64_t base);

/// base^{-(K+1) alpha} / (1 - base^{-alpha}): bound on everything dropped by
/// truncating after term K.
double tail_bound(const SeriesParams& params, std::int64_t last_term);
Real tail_bound_ext(const SeriesParams& params, std::int64_t last_term);

/// Smallest K with tail_bound(K) <= tol.
std::int64_t terms_for_tolerance(const SeriesParams& params, Real tol);

struct SeriesEvaluation {
  Real value = 0;
  /// Index of the last term summed (K).
  std::int64_t last_term = 0;
  /// True when every term after the last one summed is exactly zero, which
  /// happens at points of the form j / 2^e with base^k j / 2^e even.
  bool terminated_exactly = false;
  /// Truncation bound actually incurred (0 when terminated_exactly).
  Real truncation_bound = 0;
  /// Truncation plus floating-point summation budget.
  Real error_bound = 0;
};

/// Certified evaluation: |value - Phi(x)| <= error_bound <= tol + rounding.
/// Arguments base^k x are reduced modulo 2 with exact integer arithmetic on
/// the binary expansion of x, so no term loses resolution at depth.
SeriesEvaluation evaluate(const SeriesParams& params, Real x, Real tol);

double eval_phi(const SeriesParams& params, double x, double tol);
Real eval_phi_ext(const SeriesParams& params, Real x, Real tol);

struct BatchFailure {
  std::size_t index;
  ErrorCode code;
  std::string message;
};

struct BatchEvaluation {
  /// NaN at failed indices.
  std::vector<double> values;
  std::vector<BatchFailure> failures;
};

/// Elementwise eval_phi. Work is split into contiguous chunks across
/// `threads` workers (0 = hardware concurrency); output order is preserved.
BatchEvaluation eval_phi_batch(const SeriesParams& params, std::span<const double> points,
                               double tol, unsigned threads = 0);

}  // namespace holder
