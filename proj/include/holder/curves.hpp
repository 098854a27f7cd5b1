#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "holder/error.hpp"
#include "holder/real.hpp"

namespace holder {

struct Interval {
  Real lo = 0;
  Real hi = 0;

  Real length() const noexcept { return hi - lo; }
  Real midpoint() const noexcept { return (lo + hi) / 2; }
  bool contains(Real s) const noexcept { return s >= lo && s <= hi; }
};

Real norm(const Point& p);
Point operator-(const Point& a, const Point& b);

// Constructor parameters, kept so a curve can be written back out as a spec.
struct LineShape {
  Point origin;
  Point direction;
  Real half_len = 0;
};
struct ArcShape {
  Point center;
  Real radius = 0;
  Real phase = 0;
  Real half_len = 0;
};
struct TableShape {
  std::vector<Point> points;
};
struct CustomShape {};
using CurveShape = std::variant<LineShape, ArcShape, TableShape, CustomShape>;

/// A unit-speed C^{1,gamma} curve c: [a, b] -> R^d with
/// |c'(s2) - c'(s1)| <= rho |s2 - s1|^gamma. Immutable after construction.
class TestCurve {
 public:
  using VectorMap = std::function<Point(Real)>;

  TestCurve(Interval domain, std::size_t dimension, VectorMap position, VectorMap derivative, Real gamma, Real rho,
            CurveShape shape = CustomShape{}, bool rho_estimated = false);

  const Interval& domain() const noexcept { return domain_; }
  std::size_t dimension() const noexcept { return dimension_; }
  Real gamma() const noexcept { return gamma_; }
  Real rho() const noexcept { return rho_; }
  /// True when gamma/rho were measured rather than known analytically.
  bool rho_estimated() const noexcept { return rho_estimated_; }
  const CurveShape& shape() const noexcept { return shape_; }

  /// Both throw OutOfDomain outside [a, b].
  Point position(Real s) const;
  Point derivative(Real s) const;

 private:
  void check_domain(Real s) const;

  Interval domain_;
  std::size_t dimension_;
  VectorMap position_;
  VectorMap derivative_;
  Real gamma_;
  Real rho_;
  CurveShape shape_;
  bool rho_estimated_;
};

/// s -> x0 + s v on [-half_len, half_len]. Throws NotUnitVector when
/// | |v| - 1 | > 1e-12.
TestCurve make_line(const Point& x0, const Point& v, Real half_len);

/// s -> center + r (cos(s/r + phase), sin(s/r + phase)) on
/// [-half_len, half_len]; requires half_len <= pi r. rho = 1/r.
TestCurve make_arc(const Point& center, Real radius, Real phase, Real half_len);

struct CurveReport {
  bool unit_speed_ok = false;
  Real max_speed_deviation = 0;
  Real rho_hat = 0;
  bool rho_ok = false;
  std::size_t grid_n = 0;

  bool passed() const noexcept { return unit_speed_ok && rho_ok; }
};

/// Checks | |c'(s)| - 1 | <= unit_speed_tol on a uniform grid and estimates
/// rho_hat = max over grid pairs of |c'(s2) - c'(s1)| / |s2 - s1|^gamma,
/// accepted when rho_hat <= rho (1 + rho_slack).
CurveReport validate_curve(const TestCurve& c, std::size_t grid_n, Real unit_speed_tol, Real rho_slack = 1e-6L);

/// Arc-length reparameterization of a regular curve. Speed comes from
/// finite differences; arc length from adaptive Gauss-Kronrod quadrature;
/// the inverse from safeguarded Newton iteration. Throws DegenerateSpeed when
/// the speed falls below 1e-8. gamma is taken as 1 and rho estimated on the
/// grid (flagged via rho_estimated()).
TestCurve reparameterize_unit_speed(const TestCurve::VectorMap& raw_position, Interval raw_domain,
                                    std::size_t grid_n);

/// Natural cubic spline through sampled points (chord-length knots),
/// reparameterized to unit speed.
TestCurve make_raw_table(const std::vector<Point>& points, std::size_t grid_n = 257);

/// (u_1'(s0), ..., u_d'(s0)); throws OutOfDomain.
Point coordinate_derivative(const TestCurve& c, Real s0);

}  // namespace holder
