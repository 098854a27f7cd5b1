#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "holder/curves.hpp"
#include "holder/real.hpp"
#include "holder/separable.hpp"

namespace holder {

/// Open box U = (lo, hi) in R^d.
struct BoxDomain {
  Point lo;
  Point hi;

  std::size_t dimension() const noexcept { return lo.size(); }
};

/// Throws InvalidArgument unless lo < hi componentwise and finite.
BoxDomain make_box(const Point& lo, const Point& hi);

/// Curve family: unit-speed curves on [-1/n, 1/n] whose derivative is
/// (n, gamma)-Hoelder and which stay in K_n = {x in U : dist(x, dU) >= 1/n}.
struct FamilySpec {
  int n = 2;
  Real gamma = 1;
  BoxDomain domain;
};

/// Throws InvalidArgument (n < 2, gamma outside (0, 1]) or EmptyMargin.
FamilySpec make_family_spec(int n, Real gamma, const BoxDomain& domain);

/// K_n for a box: [lo + 1/n, hi - 1/n]. Throws EmptyMargin.
BoxDomain margin_box(const FamilySpec& spec);

/// f0(x) = sum_j (c0_j + c1_j x_j + c2_j x_j^2).
class QuadraticBaseline {
 public:
  explicit QuadraticBaseline(std::vector<std::array<Real, 3>> coefficients);

  std::size_t dimension() const noexcept { return coeffs_.size(); }
  const std::vector<std::array<Real, 3>>& coefficients() const noexcept { return coeffs_; }
  Real operator()(const Point& x) const;
  /// Upper bound on |grad f0| over the closed box, from interval evaluation
  /// of each partial derivative c1_j + 2 c2_j x_j.
  Real gradient_bound(const BoxDomain& box) const;
  /// Rounding slack for one evaluation at points of the box.
  Real evaluation_error(const BoxDomain& box) const;

 private:
  std::vector<std::array<Real, 3>> coeffs_;
};

/// Lines (any d) and counterclockwise arcs (d = 2) with curvature drawn in
/// (0, n], centered at a uniform point of K_n, kept only when every position
/// lies in K_n. Deterministic in seed. Throws EmptyMargin, RetryExhausted.
std::vector<TestCurve> sample_family(const FamilySpec& spec, std::size_t count, std::uint64_t seed,
                                     std::size_t max_retries = 10000);

struct FamilyCheck {
  bool domain_ok = false;      // [-1/n, 1/n]
  bool derivative_ok = false;  // |c'(s2) - c'(s1)| <= n |s2 - s1|^gamma on grid pairs
  bool margin_ok = false;      // positions in K_n on the grid
  Real max_holder_ratio = 0;
  Real min_boundary_distance = 0;

  bool passed() const noexcept { return domain_ok && derivative_ok && margin_ok; }
};

/// Grid recheck of both family conditions from positions and derivatives
/// alone, independent of how the curve was built.
FamilyCheck check_family_conditions(const TestCurve& c, const FamilySpec& spec, std::size_t grid_n = 201);

struct ExperimentOptions {
  int m_max = 12;
  /// 0 selects the largest component base of f.
  std::int64_t scale_base = 0;
  Real eval_tol = 1e-15L;
};

struct CurveVerdict {
  std::size_t index = 0;
  std::string kind;  // "line" | "arc"
  bool escaped = false;
  std::optional<int> escape_m;
  Real max_quotient = 0;
};

struct ExperimentReport {
  Real delta = 0;
  int n = 0;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::int64_t scale_base = 0;
  int m_first = 0;
  int m_max = 0;
  Real gradient_bound = 0;
  std::size_t escaped = 0;
  std::size_t undecided = 0;
  double escape_fraction = 0;
  /// Largest escape level over escaped curves.
  std::optional<int> max_escape_m;
  std::vector<CurveVerdict> verdicts;
  std::vector<TestCurve> curves;
};

/// Probes f_delta = f0 + delta f along each sampled curve, centered at s = 0,
/// against the bound n |s|. delta = 0 gives the smooth control.
ExperimentReport perturbation_experiment(const QuadraticBaseline& f0, const SeparableFunction& f, Real delta,
                                         const FamilySpec& spec, std::size_t count, std::uint64_t seed,
                                         const ExperimentOptions& options = {});

}  // namespace holder
