#include "holder/category.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "holder/probe.hpp"

namespace holder {

namespace {

constexpr Real kPi = std::numbers::pi_v<Real>;

Real unit_draw(std::mt19937_64& rng) { return static_cast<Real>(rng() >> 11) * 0x1p-53L; }

// Box-Muller; both values used would be fine but one keeps the stream simple.
Real normal_draw(std::mt19937_64& rng) {
  Real u1 = unit_draw(rng), u2 = unit_draw(rng);
  if (u1 <= 0) u1 = 0x1p-60L;
  return std::sqrt(-2 * std::log(u1)) * std::cos(2 * kPi * u2);
}

bool inside(const Point& p, const BoxDomain& box) {
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!(p[i] >= box.lo[i] && p[i] <= box.hi[i])) return false;
  return true;
}

// Angles on a CCW arc from phase - h/r to phase + h/r where a coordinate
// reaches an extreme: the endpoints plus every multiple of pi/2 in between.
std::vector<Real> arc_extreme_angles(Real from, Real to) {
  std::vector<Real> out{from, to};
  for (Real k = std::ceil(from / (kPi / 2)); k * (kPi / 2) <= to; k += 1) out.push_back(k * (kPi / 2));
  return out;
}

}  // namespace

BoxDomain make_box(const Point& lo, const Point& hi) {
  if (lo.empty() || lo.size() != hi.size())
    throw Error(ErrorCode::InvalidArgument, "box corners must share a positive dimension");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || !(lo[i] < hi[i]))
      throw Error(ErrorCode::InvalidArgument, "box needs finite lo < hi in every coordinate");
  return {lo, hi};
}

FamilySpec make_family_spec(int n, Real gamma, const BoxDomain& domain) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "n must be at least 2");
  if (!(gamma > 0 && gamma <= 1)) throw Error(ErrorCode::InvalidArgument, "gamma must lie in (0, 1]");
  FamilySpec spec{n, gamma, make_box(domain.lo, domain.hi)};
  margin_box(spec);
  return spec;
}

BoxDomain margin_box(const FamilySpec& spec) {
  const Real m = 1 / static_cast<Real>(spec.n);
  BoxDomain k{spec.domain.lo, spec.domain.hi};
  for (std::size_t i = 0; i < k.lo.size(); ++i) {
    k.lo[i] += m;
    k.hi[i] -= m;
    if (k.lo[i] > k.hi[i]) throw Error(ErrorCode::EmptyMargin, "K_n is empty: the box is thinner than 2/n");
  }
  return k;
}

QuadraticBaseline::QuadraticBaseline(std::vector<std::array<Real, 3>> coefficients) : coeffs_(std::move(coefficients)) {
  if (coeffs_.empty()) throw Error(ErrorCode::InvalidArgument, "baseline needs at least one coordinate");
  for (const auto& c : coeffs_)
    for (Real v : c)
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "baseline coefficients must be finite");
}

Real QuadraticBaseline::operator()(const Point& x) const {
  if (x.size() != coeffs_.size()) throw Error(ErrorCode::DimensionMismatch, "baseline dimension mismatch");
  Real s = 0;
  for (std::size_t j = 0; j < x.size(); ++j) s += coeffs_[j][0] + x[j] * (coeffs_[j][1] + x[j] * coeffs_[j][2]);
  return s;
}

Real QuadraticBaseline::gradient_bound(const BoxDomain& box) const {
  if (box.dimension() != coeffs_.size()) throw Error(ErrorCode::DimensionMismatch, "baseline dimension mismatch");
  Real sq = 0;
  for (std::size_t j = 0; j < coeffs_.size(); ++j) {
    // Partial derivative is affine in x_j, so its interval hull is spanned by
    // the endpoint values.
    Real a = coeffs_[j][1] + 2 * coeffs_[j][2] * box.lo[j];
    Real b = coeffs_[j][1] + 2 * coeffs_[j][2] * box.hi[j];
    Real m = std::max(std::fabs(a), std::fabs(b));
    sq += m * m;
  }
  Real g = std::sqrt(sq);
  return std::nextafter(g * (1 + 16 * std::numeric_limits<Real>::epsilon()), std::numeric_limits<Real>::infinity());
}

Real QuadraticBaseline::evaluation_error(const BoxDomain& box) const {
  Real mag = 0;
  for (std::size_t j = 0; j < coeffs_.size(); ++j) {
    Real x = std::max(std::fabs(box.lo[j]), std::fabs(box.hi[j]));
    mag += std::fabs(coeffs_[j][0]) + x * (std::fabs(coeffs_[j][1]) + x * std::fabs(coeffs_[j][2]));
  }
  return 8 * static_cast<Real>(coeffs_.size() + 2) * std::numeric_limits<Real>::epsilon() * mag;
}

std::vector<TestCurve> sample_family(const FamilySpec& spec, std::size_t count, std::uint64_t seed,
                                     std::size_t max_retries) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "count must be at least 1");
  const BoxDomain k = margin_box(spec);
  const std::size_t d = spec.domain.dimension();
  const Real h = 1 / static_cast<Real>(spec.n);
  std::mt19937_64 rng(seed);
  std::vector<TestCurve> out;
  out.reserve(count);
  std::size_t failures = 0;
  while (out.size() < count) {
    Point p(d);
    for (std::size_t i = 0; i < d; ++i) p[i] = k.lo[i] + (k.hi[i] - k.lo[i]) * unit_draw(rng);
    const bool arc = d == 2 && (rng() & 1u);
    if (arc) {
      const Real theta = 2 * kPi * unit_draw(rng);
      Real kappa = static_cast<Real>(spec.n) * (1 - unit_draw(rng));  // (0, n]
      const Real r = 1 / kappa;
      const Real phase = theta - kPi / 2;
      Point center{p[0] - r * std::cos(phase), p[1] - r * std::sin(phase)};
      bool ok = true;
      for (Real ang : arc_extreme_angles(phase - h / r, phase + h / r)) {
        Point q{center[0] + r * std::cos(ang), center[1] + r * std::sin(ang)};
        if (!inside(q, k)) {
          ok = false;
          break;
        }
      }
      if (ok) {
        out.push_back(make_arc(center, r, phase, h));
        continue;
      }
    } else {
      Point v(d);
      Real nv = 0;
      while (!(nv > 1e-6L)) {
        for (auto& x : v) x = normal_draw(rng);
        nv = norm(v);
      }
      for (auto& x : v) x /= nv;
      Point a(d), b(d);
      for (std::size_t i = 0; i < d; ++i) a[i] = p[i] - h * v[i], b[i] = p[i] + h * v[i];
      if (inside(a, k) && inside(b, k)) {
        out.push_back(make_line(p, v, h));
        continue;
      }
    }
    if (++failures > max_retries)
      throw Error(ErrorCode::RetryExhausted, "rejection sampling exceeded " + std::to_string(max_retries) + " retries");
  }
  return out;
}

FamilyCheck check_family_conditions(const TestCurve& c, const FamilySpec& spec, std::size_t grid_n) {
  if (grid_n < 2) throw Error(ErrorCode::InvalidArgument, "grid_n must be at least 2");
  FamilyCheck out;
  const Real h = 1 / static_cast<Real>(spec.n);
  const Real eps = 64 * std::numeric_limits<Real>::epsilon();
  out.domain_ok = std::fabs(c.domain().lo + h) <= eps && std::fabs(c.domain().hi - h) <= eps &&
                  c.dimension() == spec.domain.dimension();
  if (c.dimension() != spec.domain.dimension()) return out;
  std::vector<Real> s(grid_n);
  std::vector<Point> pos(grid_n), der(grid_n);
  for (std::size_t i = 0; i < grid_n; ++i) {
    s[i] = c.domain().lo + c.domain().length() * static_cast<Real>(i) / static_cast<Real>(grid_n - 1);
    if (i + 1 == grid_n) s[i] = c.domain().hi;
    pos[i] = c.position(s[i]);
    der[i] = c.derivative(s[i]);
  }
  for (std::size_t i = 0; i < grid_n; ++i)
    for (std::size_t j = i + 1; j < grid_n; ++j) {
      Real ds = std::pow(s[j] - s[i], spec.gamma);
      if (ds > 0) out.max_holder_ratio = std::max(out.max_holder_ratio, norm(der[j] - der[i]) / ds);
    }
  out.derivative_ok = out.max_holder_ratio <= static_cast<Real>(spec.n) * (1 + 1e-9L);
  out.min_boundary_distance = std::numeric_limits<Real>::infinity();
  for (const auto& p : pos)
    for (std::size_t i = 0; i < p.size(); ++i)
      out.min_boundary_distance =
          std::min({out.min_boundary_distance, p[i] - spec.domain.lo[i], spec.domain.hi[i] - p[i]});
  out.margin_ok = out.min_boundary_distance >= h - eps;
  return out;
}

ExperimentReport perturbation_experiment(const QuadraticBaseline& f0, const SeparableFunction& f, Real delta,
                                         const FamilySpec& spec, std::size_t count, std::uint64_t seed,
                                         const ExperimentOptions& options) {
  if (!(delta >= 0) || !std::isfinite(delta)) throw Error(ErrorCode::InvalidArgument, "delta must be >= 0");
  if (f.dimension() != spec.domain.dimension() || f0.dimension() != spec.domain.dimension())
    throw Error(ErrorCode::DimensionMismatch, "function, baseline and domain dimensions differ");
  ExperimentReport rep;
  rep.delta = delta;
  rep.n = spec.n;
  rep.count = count;
  rep.seed = seed;
  rep.scale_base = options.scale_base > 0 ? options.scale_base : f.max_base();
  rep.m_max = options.m_max;
  rep.gradient_bound = f0.gradient_bound(spec.domain);
  rep.curves = sample_family(spec, count, seed);

  auto fd = [&](const Point& x) {
    Real v = f0(x);
    if (delta > 0) v += delta * eval_separable(f, x, options.eval_tol);
    return v;
  };
  MembershipOptions mo;
  mo.scale_base = rep.scale_base;
  mo.m_max = options.m_max;
  mo.evaluation_error = f0.evaluation_error(spec.domain) + delta * options.eval_tol * 2;
  auto results = fn_membership_probe(fd, rep.curves, spec.n, mo);
  for (std::size_t i = 0; i < results.size(); ++i) {
    CurveVerdict v;
    v.index = i;
    v.kind = std::holds_alternative<ArcShape>(rep.curves[i].shape()) ? "arc" : "line";
    v.escaped = !results[i].member;
    v.escape_m = results[i].witness_m;
    v.max_quotient = results[i].max_quotient;
    rep.m_first = results[i].m_first;
    if (v.escaped) {
      ++rep.escaped;
      rep.max_escape_m = std::max(rep.max_escape_m.value_or(*v.escape_m), *v.escape_m);
    } else {
      ++rep.undecided;
    }
    rep.verdicts.push_back(v);
  }
  rep.escape_fraction = count ? static_cast<double>(rep.escaped) / static_cast<double>(count) : 0;
  return rep;
}

}  // namespace holder
