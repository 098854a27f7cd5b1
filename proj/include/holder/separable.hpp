#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "holder/curves.hpp"
#include "holder/real.hpp"
#include "holder/sawtooth.hpp"

namespace holder {

/// f(x_1, ..., x_d) = sum_j Phi_j(x_j) with pairwise distinct exponents in
/// (1/(1+gamma_ref), 1).
class SeparableFunction {
 public:
  const std::vector<SeriesParams>& components() const noexcept { return components_; }
  std::size_t dimension() const noexcept { return components_.size(); }
  Real gamma_ref() const noexcept { return gamma_ref_; }
  /// Largest component base; default scale base for probes of f.
  std::int64_t max_base() const noexcept;
  /// Sum of the component series bounds.
  Real sup_bound() const noexcept;

 private:
  friend SeparableFunction build_separable(const std::vector<double>&, Real,
                                           const std::vector<std::optional<std::int64_t>>&);
  std::vector<SeriesParams> components_;
  Real gamma_ref_ = 1;
};

/// Smallest even b >= 2 with b^{1-alpha} > 2 (1 + margin).
std::int64_t auto_base(double alpha, double margin = 0.01);

/// `bases` holds one entry per component (nullopt = auto) or is empty for all
/// auto. Throws ExponentOutOfRange, DuplicateExponents (gap < 1e-12),
/// DimensionMismatch and whatever validate_params throws.
SeparableFunction build_separable(const std::vector<double>& alphas, Real gamma,
                                  const std::vector<std::optional<std::int64_t>>& bases = {});

/// sum_j eval_phi(params_j, x_j, tol / d); throws DimensionMismatch.
Real eval_separable(const SeparableFunction& f, const Point& x, Real tol);

struct PredictedRegularity {
  double alpha = 0;
  std::vector<std::size_t> active;      // A: |u_j'(s0)| > zero_tol (0-based)
  std::vector<std::size_t> stationary;  // B
  /// Smallest |u_j'(s0)| over A. Small values mean a nearby stationary
  /// coordinate may blur the observed slope at practical scales.
  Real min_active_speed = 0;
};

/// Requires s0 at least 1e-9 inside the curve domain. Throws OutOfDomain,
/// DimensionMismatch, GammaMismatch (c.gamma < gamma_ref) and EmptyA.
PredictedRegularity predicted_exponent(const SeparableFunction& f, const TestCurve& c, Real s0,
                                       Real zero_tol = 1e-7L);

}  // namespace holder
