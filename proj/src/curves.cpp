#include "holder/curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace holder {

namespace {

constexpr Real kPi = std::numbers::pi_v<Real>;

std::string fmt(Real v) {
  std::ostringstream os;
  os.precision(17);
  os << static_cast<double>(v);
  return os.str();
}

void require_finite(const Point& p, const char* what) {
  for (Real v : p)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, std::string(what) + " has a non-finite entry");
}

std::vector<Real> uniform_grid(const Interval& d, std::size_t n) {
  std::vector<Real> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = (n == 1) ? d.lo : d.lo + d.length() * static_cast<Real>(i) / static_cast<Real>(n - 1);
  if (n > 1) g.back() = d.hi;
  return g;
}

// Second-order finite differences that never leave the domain.
Point fd_derivative(const TestCurve::VectorMap& f, const Interval& d, Real t) {
  const Real h = std::max(d.length() * 1e-6L, std::numeric_limits<Real>::epsilon());
  Point out;
  if (t - h >= d.lo && t + h <= d.hi) {
    Point a = f(t + h), b = f(t - h);
    out.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] - b[i]) / (2 * h);
  } else if (t - h < d.lo) {
    Point p0 = f(t), p1 = f(t + h), p2 = f(t + 2 * h);
    out.resize(p0.size());
    for (std::size_t i = 0; i < p0.size(); ++i) out[i] = (-3 * p0[i] + 4 * p1[i] - p2[i]) / (2 * h);
  } else {
    Point p0 = f(t), p1 = f(t - h), p2 = f(t - 2 * h);
    out.resize(p0.size());
    for (std::size_t i = 0; i < p0.size(); ++i) out[i] = (3 * p0[i] - 4 * p1[i] + p2[i]) / (2 * h);
  }
  return out;
}

// Unit-speed view of a raw curve. Shared state lives behind a shared_ptr so the
// TestCurve stays cheap to copy.
struct ArcLengthMap {
  TestCurve::VectorMap raw;
  Interval domain;
  std::vector<Real> knots;       // raw parameter grid
  std::vector<Real> cumulative;  // arc length at each knot

  Real speed(Real t) const { return norm(fd_derivative(raw, domain, t)); }

  Real panel_length(Real a, Real b) const {
    if (b <= a) return 0;
    auto g = [this](Real t) { return speed(t); };
    return boost::math::quadrature::gauss_kronrod<Real, 15>::integrate(g, a, b, 8, 1e-10L);
  }

  Real total() const { return cumulative.back(); }

  // Raw parameter t with arc length s from the start.
  Real invert(Real s) const {
    if (s <= 0) return domain.lo;
    if (s >= total()) return domain.hi;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
    std::size_t i = static_cast<std::size_t>(it - cumulative.begin()) - 1;
    if (i + 1 >= knots.size()) return domain.hi;
    Real lo = knots[i], hi = knots[i + 1];
    Real target = s - cumulative[i];
    Real t = lo + (hi - lo) * target / (cumulative[i + 1] - cumulative[i]);
    for (int iter = 0; iter < 60; ++iter) {
      Real g = panel_length(knots[i], t) - target;
      if (std::fabs(g) <= 1e-13L * std::max<Real>(1, total())) break;
      if (g > 0)
        hi = t;
      else
        lo = t;
      Real next = t - g / speed(t);
      if (!(next > lo && next < hi)) next = (lo + hi) / 2;
      if (next == t) break;
      t = next;
    }
    return t;
  }
};

Real estimate_rho(const TestCurve& c, const std::vector<Real>& grid) {
  std::vector<Point> d(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) d[i] = c.derivative(grid[i]);
  Real best = 0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      Real ds = std::pow(grid[j] - grid[i], c.gamma());
      if (ds <= 0) continue;
      best = std::max(best, norm(d[j] - d[i]) / ds);
    }
  return best;
}

}  // namespace

Real norm(const Point& p) {
  Real s = 0;
  for (Real v : p) s += v * v;
  return std::sqrt(s);
}

Point operator-(const Point& a, const Point& b) {
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

TestCurve::TestCurve(Interval domain, std::size_t dimension, VectorMap position, VectorMap derivative, Real gamma,
                     Real rho, CurveShape shape, bool rho_estimated)
    : domain_(domain),
      dimension_(dimension),
      position_(std::move(position)),
      derivative_(std::move(derivative)),
      gamma_(gamma),
      rho_(rho),
      shape_(std::move(shape)),
      rho_estimated_(rho_estimated) {
  if (!std::isfinite(domain.lo) || !std::isfinite(domain.hi) || !(domain.lo < domain.hi))
    throw Error(ErrorCode::InvalidArgument, "curve domain must be a nondegenerate finite interval");
  if (dimension == 0) throw Error(ErrorCode::InvalidArgument, "curve dimension must be at least 1");
  if (!(gamma > 0 && gamma <= 1)) throw Error(ErrorCode::InvalidArgument, "gamma must lie in (0, 1]");
  if (!(rho >= 0) || !std::isfinite(rho)) throw Error(ErrorCode::InvalidArgument, "rho must be finite and >= 0");
  if (!position_ || !derivative_) throw Error(ErrorCode::InvalidArgument, "curve maps must be callable");
}

void TestCurve::check_domain(Real s) const {
  if (!domain_.contains(s))
    throw Error(ErrorCode::OutOfDomain,
                "s = " + fmt(s) + " outside [" + fmt(domain_.lo) + ", " + fmt(domain_.hi) + "]");
}

Point TestCurve::position(Real s) const {
  check_domain(s);
  return position_(s);
}

Point TestCurve::derivative(Real s) const {
  check_domain(s);
  return derivative_(s);
}

TestCurve make_line(const Point& x0, const Point& v, Real half_len) {
  require_finite(x0, "line origin");
  require_finite(v, "line direction");
  if (x0.empty() || x0.size() != v.size())
    throw Error(ErrorCode::DimensionMismatch, "origin and direction must share a positive dimension");
  if (std::fabs(norm(v) - 1) > 1e-12L)
    throw Error(ErrorCode::NotUnitVector, "direction norm " + fmt(norm(v)) + " is not 1");
  if (!(half_len > 0) || !std::isfinite(half_len))
    throw Error(ErrorCode::InvalidArgument, "half_len must be positive and finite");
  auto pos = [x0, v](Real s) {
    Point p(x0.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = x0[i] + s * v[i];
    return p;
  };
  auto der = [v](Real) { return v; };
  return TestCurve({-half_len, half_len}, x0.size(), pos, der, 1, 0, LineShape{x0, v, half_len});
}

TestCurve make_arc(const Point& center, Real radius, Real phase, Real half_len) {
  require_finite(center, "arc center");
  if (center.size() != 2) throw Error(ErrorCode::DimensionMismatch, "arc center must be 2-dimensional");
  if (!(radius > 0) || !std::isfinite(radius)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
  if (!std::isfinite(phase)) throw Error(ErrorCode::NonFinite, "phase must be finite");
  if (!(half_len > 0) || half_len > kPi * radius)
    throw Error(ErrorCode::InvalidArgument, "half_len must lie in (0, pi * radius]");
  auto pos = [center, radius, phase](Real s) {
    Real th = s / radius + phase;
    return Point{center[0] + radius * std::cos(th), center[1] + radius * std::sin(th)};
  };
  auto der = [radius, phase](Real s) {
    Real th = s / radius + phase;
    return Point{-std::sin(th), std::cos(th)};
  };
  return TestCurve({-half_len, half_len}, 2, pos, der, 1, 1 / radius, ArcShape{center, radius, phase, half_len});
}

CurveReport validate_curve(const TestCurve& c, std::size_t grid_n, Real unit_speed_tol, Real rho_slack) {
  if (grid_n < 2) throw Error(ErrorCode::InvalidArgument, "grid_n must be at least 2");
  CurveReport r;
  r.grid_n = grid_n;
  auto grid = uniform_grid(c.domain(), grid_n);
  for (Real s : grid) r.max_speed_deviation = std::max(r.max_speed_deviation, std::fabs(norm(c.derivative(s)) - 1));
  r.unit_speed_ok = r.max_speed_deviation <= unit_speed_tol;
  r.rho_hat = estimate_rho(c, grid);
  r.rho_ok = r.rho_hat <= c.rho() * (1 + rho_slack) + std::numeric_limits<Real>::epsilon() * 16;
  return r;
}

TestCurve reparameterize_unit_speed(const TestCurve::VectorMap& raw_position, Interval raw_domain, std::size_t grid_n) {
  if (!raw_position) throw Error(ErrorCode::InvalidArgument, "raw position map must be callable");
  if (!(raw_domain.lo < raw_domain.hi) || !std::isfinite(raw_domain.length()))
    throw Error(ErrorCode::InvalidArgument, "raw domain must be a nondegenerate finite interval");
  if (grid_n < 2) throw Error(ErrorCode::InvalidArgument, "grid_n must be at least 2");

  auto map = std::make_shared<ArcLengthMap>();
  map->raw = raw_position;
  map->domain = raw_domain;
  map->knots = uniform_grid(raw_domain, grid_n);
  const std::size_t dim = raw_position(raw_domain.lo).size();
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "raw curve has dimension 0");

  constexpr Real kMinSpeed = 1e-8L;
  std::size_t argmin = 0;
  Real vmin = std::numeric_limits<Real>::infinity();
  for (std::size_t i = 0; i < map->knots.size(); ++i) {
    Real v = map->speed(map->knots[i]);
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "raw curve speed is not finite");
    if (v < vmin) vmin = v, argmin = i;
  }
  // A zero of the speed can hide between grid points; refine around the
  // smallest sample by golden-section search.
  {
    Real a = map->knots[argmin == 0 ? 0 : argmin - 1];
    Real b = map->knots[std::min(argmin + 1, map->knots.size() - 1)];
    const Real g = (std::sqrt(Real(5)) - 1) / 2;
    Real x1 = b - g * (b - a), x2 = a + g * (b - a);
    Real f1 = map->speed(x1), f2 = map->speed(x2);
    for (int it = 0; it < 120 && b - a > 1e-15L * raw_domain.length(); ++it) {
      if (f1 < f2) {
        b = x2, x2 = x1, f2 = f1, x1 = b - g * (b - a), f1 = map->speed(x1);
      } else {
        a = x1, x1 = x2, f1 = f2, x2 = a + g * (b - a), f2 = map->speed(x2);
      }
    }
    vmin = std::min({vmin, f1, f2});
  }
  if (vmin < kMinSpeed)
    throw Error(ErrorCode::DegenerateSpeed, "estimated raw speed " + fmt(vmin) + " below 1e-8");

  map->cumulative.assign(map->knots.size(), 0);
  for (std::size_t i = 1; i < map->knots.size(); ++i)
    map->cumulative[i] = map->cumulative[i - 1] + map->panel_length(map->knots[i - 1], map->knots[i]);

  const Real total = map->total();
  auto pos = [map](Real s) { return map->raw(map->invert(s)); };
  auto der = [map](Real s) {
    Point d = fd_derivative(map->raw, map->domain, map->invert(s));
    Real n = norm(d);
    for (Real& v : d) v /= n;
    return d;
  };
  TestCurve provisional({0, total}, dim, pos, der, 1, 0, CustomShape{}, true);
  Real rho = estimate_rho(provisional, uniform_grid(provisional.domain(), std::min<std::size_t>(grid_n, 257)));
  return TestCurve({0, total}, dim, pos, der, 1, rho, CustomShape{}, true);
}

TestCurve make_raw_table(const std::vector<Point>& points, std::size_t grid_n) {
  if (points.size() < 2) throw Error(ErrorCode::InvalidArgument, "raw table needs at least 2 points");
  const std::size_t dim = points.front().size();
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "raw table points must be non-empty");
  for (const auto& p : points) {
    if (p.size() != dim) throw Error(ErrorCode::DimensionMismatch, "raw table points differ in dimension");
    require_finite(p, "raw table point");
  }
  const std::size_t n = points.size();
  std::vector<Real> t(n, 0);
  for (std::size_t i = 1; i < n; ++i) {
    Real step = norm(points[i] - points[i - 1]);
    if (!(step > 0)) throw Error(ErrorCode::DegenerateSpeed, "consecutive raw table points coincide");
    t[i] = t[i - 1] + step;
  }

  // Natural cubic spline per coordinate: second derivatives via Thomas algorithm.
  auto second = std::make_shared<std::vector<Point>>(n, Point(dim, 0));
  if (n > 2) {
    for (std::size_t k = 0; k < dim; ++k) {
      std::vector<Real> cp(n, 0), dp(n, 0);
      for (std::size_t i = 1; i + 1 < n; ++i) {
        Real h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
        Real a = h0, b = 2 * (h0 + h1), c = h1;
        Real r = 6 * ((points[i + 1][k] - points[i][k]) / h1 - (points[i][k] - points[i - 1][k]) / h0);
        Real denom = b - a * cp[i - 1];
        cp[i] = c / denom;
        dp[i] = (r - a * dp[i - 1]) / denom;
      }
      for (std::size_t i = n - 2; i >= 1; --i) {
        (*second)[i][k] = dp[i] - cp[i] * (*second)[i + 1][k];
        if (i == 1) break;
      }
    }
  }
  auto pts = std::make_shared<std::vector<Point>>(points);
  auto knots = std::make_shared<std::vector<Real>>(t);
  auto spline = [pts, knots, second, dim](Real x) {
    const auto& tk = *knots;
    std::size_t i = static_cast<std::size_t>(std::upper_bound(tk.begin(), tk.end(), x) - tk.begin());
    i = std::clamp<std::size_t>(i, 1, tk.size() - 1) - 1;
    Real h = tk[i + 1] - tk[i];
    Real a = (tk[i + 1] - x) / h, b = (x - tk[i]) / h;
    Point out(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      const Real y0 = (*pts)[i][k], y1 = (*pts)[i + 1][k];
      const Real m0 = (*second)[i][k], m1 = (*second)[i + 1][k];
      out[k] = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6;
    }
    return out;
  };
  TestCurve c = reparameterize_unit_speed(spline, {0, t.back()}, grid_n);
  return TestCurve(c.domain(), c.dimension(), [c](Real s) { return c.position(s); },
                   [c](Real s) { return c.derivative(s); }, c.gamma(), c.rho(), TableShape{points}, true);
}

Point coordinate_derivative(const TestCurve& c, Real s0) { return c.derivative(s0); }

}  // namespace holder
