#include "holder/separable.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace holder {

std::int64_t SeparableFunction::max_base() const noexcept {
  std::int64_t b = 2;
  for (const auto& c : components_) b = std::max(b, c.base());
  return b;
}

Real SeparableFunction::sup_bound() const noexcept {
  Real s = 0;
  for (const auto& c : components_) s += c.series_bound();
  return s;
}

std::int64_t auto_base(double alpha, double margin) {
  if (!std::isfinite(alpha) || !(alpha > 0 && alpha < 1))
    throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in (0, 1)");
  if (!(margin >= 0) || !std::isfinite(margin)) throw Error(ErrorCode::InvalidArgument, "margin must be >= 0");
  const Real target = 2 * (1 + static_cast<Real>(margin));
  const Real expo = 1 - static_cast<Real>(alpha);
  // Start just below the analytic threshold and walk upward over even b.
  Real guess = std::pow(target, 1 / expo);
  if (!(guess < 4e18L)) throw Error(ErrorCode::InvalidArgument, "alpha too close to 1 for a 64-bit base");
  std::int64_t b = std::max<std::int64_t>(2, static_cast<std::int64_t>(guess) - 4);
  if (b % 2) --b;
  b = std::max<std::int64_t>(b, 2);
  while (!(std::pow(static_cast<Real>(b), expo) > target)) b += 2;
  return b;
}

SeparableFunction build_separable(const std::vector<double>& alphas, Real gamma,
                                  const std::vector<std::optional<std::int64_t>>& bases) {
  if (!(gamma > 0 && gamma <= 1)) throw Error(ErrorCode::InvalidArgument, "gamma must lie in (0, 1]");
  if (alphas.empty()) throw Error(ErrorCode::InvalidArgument, "at least one component is required");
  if (!bases.empty() && bases.size() != alphas.size())
    throw Error(ErrorCode::DimensionMismatch, "bases list must match the number of exponents");
  const Real lower = 1 / (1 + gamma);
  for (double a : alphas)
    if (!std::isfinite(a) || !(a > lower && a < 1))
      throw Error(ErrorCode::ExponentOutOfRange,
                  "alpha " + std::to_string(a) + " outside (" + std::to_string(static_cast<double>(lower)) + ", 1)");
  for (std::size_t i = 0; i < alphas.size(); ++i)
    for (std::size_t j = i + 1; j < alphas.size(); ++j)
      if (std::fabs(alphas[i] - alphas[j]) < 1e-12)
        throw Error(ErrorCode::DuplicateExponents,
                    "components " + std::to_string(i) + " and " + std::to_string(j) + " share an exponent");
  SeparableFunction f;
  f.gamma_ref_ = gamma;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    std::int64_t b = (bases.empty() || !bases[i]) ? auto_base(alphas[i]) : *bases[i];
    f.components_.push_back(validate_params(alphas[i], b));
  }
  return f;
}

Real eval_separable(const SeparableFunction& f, const Point& x, Real tol) {
  if (x.size() != f.dimension())
    throw Error(ErrorCode::DimensionMismatch,
                "point has dimension " + std::to_string(x.size()) + ", function " + std::to_string(f.dimension()));
  const Real share = tol / static_cast<Real>(f.dimension());
  Real sum = 0;
  for (std::size_t j = 0; j < x.size(); ++j) sum += eval_phi_ext(f.components()[j], x[j], share);
  return sum;
}

PredictedRegularity predicted_exponent(const SeparableFunction& f, const TestCurve& c, Real s0, Real zero_tol) {
  constexpr Real kMargin = 1e-9L;
  if (c.dimension() != f.dimension())
    throw Error(ErrorCode::DimensionMismatch, "curve and function dimensions differ");
  if (c.gamma() < f.gamma_ref())
    throw Error(ErrorCode::GammaMismatch, "curve gamma below the function's reference gamma");
  if (!(s0 > c.domain().lo + kMargin && s0 < c.domain().hi - kMargin))
    throw Error(ErrorCode::OutOfDomain, "s0 must lie in the interior of the curve domain");
  Point d = coordinate_derivative(c, s0);
  PredictedRegularity out;
  out.alpha = std::numeric_limits<double>::infinity();
  out.min_active_speed = std::numeric_limits<Real>::infinity();
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (std::fabs(d[j]) > zero_tol) {
      out.active.push_back(j);
      out.alpha = std::min(out.alpha, f.components()[j].alpha());
      out.min_active_speed = std::min(out.min_active_speed, std::fabs(d[j]));
    } else {
      out.stationary.push_back(j);
    }
  }
  if (out.active.empty()) throw Error(ErrorCode::EmptyA, "no coordinate moves at s0; unit speed is broken");
  return out;
}

}  // namespace holder
