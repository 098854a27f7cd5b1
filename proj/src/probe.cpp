#include "holder/probe.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "holder/error.hpp"

namespace holder {

namespace {

constexpr Real kEndpointMargin = 1e-9L;

std::string fmt(Real v) {
  std::ostringstream os;
  os.precision(21);
  os << v;
  return os.str();
}

Real level_radius(std::int64_t base, int m) { return std::pow(static_cast<Real>(base), static_cast<Real>(-m)); }

void check_base(std::int64_t base) {
  if (base < 2) throw Error(ErrorCode::InvalidArgument, "scale base must be at least 2");
}

void check_range(ScaleRange r) {
  if (r.m_min < 0 || r.m_max < r.m_min) throw Error(ErrorCode::InvalidArgument, "invalid scale range");
}

// Independent stream per level so levels can be recomputed on their own.
std::mt19937_64 level_rng(std::uint64_t seed, int m) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(m), 0x5eedu};
  return std::mt19937_64(seq);
}

Real unit_draw(std::mt19937_64& rng) { return static_cast<Real>(rng() >> 11) * 0x1p-53L; }

Real checked_eval(const ScalarMap& f, Real y) {
  try {
    Real v = f(y);
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "value is not finite");
    return v;
  } catch (const Error& e) {
    throw Error(ErrorCode::EvaluationFailed, "at y = " + fmt(y) + ": " + e.what());
  }
}

}  // namespace

OscillationProfile oscillation_profile(const ScalarMap& f, Real x0, ScaleRange range, std::size_t samples_per_scale,
                                       std::uint64_t seed, std::int64_t scale_base) {
  check_base(scale_base);
  if (!(range.m_min < range.m_max)) throw Error(ErrorCode::InvalidArgument, "m_min must be below m_max");
  check_range(range);
  if (samples_per_scale < 16) throw Error(ErrorCode::InvalidArgument, "samples_per_scale must be at least 16");
  if (!std::isfinite(x0)) throw Error(ErrorCode::NonFinite, "center must be finite");

  OscillationProfile p;
  p.center = x0;
  p.scale_base = scale_base;
  p.samples_per_scale = samples_per_scale;
  p.seed = seed;
  const Real f0 = checked_eval(f, x0);
  const Real b = static_cast<Real>(scale_base);

  for (int m = range.m_min; m <= range.m_max; ++m) {
    const Real outer = level_radius(scale_base, m);
    const Real inner = outer / b;
    std::vector<Real> ys{x0 - outer, x0 + outer};
    Real cell = std::floor(x0 * std::pow(b, static_cast<Real>(m)));
    for (Real g : {cell * outer, (cell + 1) * outer}) {
      Real dist = std::fabs(g - x0);
      if (dist > inner && dist <= outer) ys.push_back(g);
    }
    auto rng = level_rng(seed, m);
    const std::size_t random_count = samples_per_scale > ys.size() ? samples_per_scale - ys.size() : 0;
    const std::size_t per_side = (random_count + 1) / 2;
    const Real width = outer - inner;
    for (std::size_t k = 0; k < random_count; ++k) {
      const std::size_t stratum = k / 2;
      const Real sign = (k % 2 == 0) ? 1 : -1;
      Real u = (static_cast<Real>(stratum) + unit_draw(rng)) / static_cast<Real>(per_side);
      Real d = outer - u * width;  // (inner, outer] up to the open end
      if (!(d > inner)) d = outer;
      ys.push_back(x0 + sign * d);
    }
    Real omega = 0;
    for (Real y : ys) omega = std::max(omega, std::fabs(checked_eval(f, y) - f0));
    p.levels.push_back(m);
    p.scales.push_back(outer);
    p.oscillations.push_back(omega);
  }
  return p;
}

ExponentEstimate estimate_exponent(const OscillationProfile& p, Real drop_floor, int drop_coarsest) {
  if (p.scales.size() != p.oscillations.size() || p.scales.size() != p.levels.size())
    throw Error(ErrorCode::InvalidArgument, "profile lists differ in length");
  if (drop_coarsest < 0) throw Error(ErrorCode::InvalidArgument, "drop_coarsest must be >= 0");
  std::vector<Real> xs, ys;
  ExponentEstimate e;
  bool first = true;
  for (std::size_t i = static_cast<std::size_t>(drop_coarsest); i < p.scales.size(); ++i) {
    if (!(p.oscillations[i] >= drop_floor) || !(p.oscillations[i] > 0)) continue;
    xs.push_back(std::log(p.scales[i]));
    ys.push_back(std::log(p.oscillations[i]));
    if (first) e.window_min = p.levels[i], first = false;
    e.window_max = p.levels[i];
  }
  if (xs.size() < 3)
    throw Error(ErrorCode::InsufficientScales, std::to_string(xs.size()) + " usable scales, need at least 3");
  const Real n = static_cast<Real>(xs.size());
  Real mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= n, my /= n;
  Real sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  Real slope = sxy / sxx;
  Real r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1;
  e.alpha_hat = static_cast<double>(slope);
  e.r_squared = static_cast<double>(std::clamp<Real>(r2, 0, 1));
  e.scales_used = xs.size();
  return e;
}

std::vector<Real> level_fractions(std::int64_t scale_base) {
  check_base(scale_base);
  std::vector<Real> t{1};
  const Real floor = 1 / static_cast<Real>(scale_base);
  while (t.back() / 2 > floor) t.push_back(t.back() / 2);
  return t;
}

QuotientReport lipschitz_quotient(const FieldMap& f, const TestCurve& c, Real s0, ScaleRange range,
                                  std::int64_t scale_base) {
  check_base(scale_base);
  check_range(range);
  const Interval& d = c.domain();
  const Real r0 = level_radius(scale_base, range.m_min);
  if (!(s0 - r0 >= d.lo + kEndpointMargin && s0 + r0 <= d.hi - kEndpointMargin))
    throw Error(ErrorCode::OutOfDomain, "probe radius " + fmt(r0) + " around s0 = " + fmt(s0) +
                                            " leaves the curve domain interior");
  auto value = [&](Real s) {
    Real v = f(c.position(s));
    if (!std::isfinite(v)) throw Error(ErrorCode::EvaluationFailed, "non-finite value at s = " + fmt(s));
    return v;
  };
  QuotientReport rep;
  rep.s0 = s0;
  const Real f0 = value(s0);
  const auto fractions = level_fractions(scale_base);
  for (int m = range.m_min; m <= range.m_max; ++m) {
    const Real r = level_radius(scale_base, m);
    QuotientRow row{m, r, 0};
    for (Real t : fractions)
      for (Real sign : {Real(1), Real(-1)}) {
        Real s = s0 + sign * r * t;
        Real h = std::fabs(s - s0);
        if (h > 0) row.max_quotient = std::max(row.max_quotient, std::fabs(value(s) - f0) / h);
      }
    rep.max_quotient = std::max(rep.max_quotient, row.max_quotient);
    rep.rows.push_back(row);
  }
  return rep;
}

std::vector<MembershipResult> fn_membership_probe(const FieldMap& f, const std::vector<TestCurve>& curves, int n,
                                                  const MembershipOptions& options) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  check_base(options.scale_base);
  if (!(options.evaluation_error >= 0)) throw Error(ErrorCode::InvalidArgument, "evaluation_error must be >= 0");
  const Real reach = 1 / static_cast<Real>(n);
  int m_first = 0;
  while (level_radius(options.scale_base, m_first) > reach - kEndpointMargin) ++m_first;
  if (options.m_max < m_first) throw Error(ErrorCode::InvalidArgument, "m_max below the first admissible level");

  std::vector<MembershipResult> out;
  out.reserve(curves.size());
  const auto fractions = level_fractions(options.scale_base);
  for (const auto& c : curves) {
    const Real mid = c.domain().midpoint();
    const Real slack = 1e-12L * std::max<Real>(1, reach);
    if (c.domain().lo > mid - reach + slack || c.domain().hi < mid + reach - slack)
      throw Error(ErrorCode::CurveTooShort, "curve domain does not contain [-1/n, 1/n] around its center");
    MembershipResult res;
    res.m_first = m_first;
    res.m_last = options.m_max;
    const Real f0 = f(c.position(mid));
    for (int m = m_first; m <= options.m_max && res.member; ++m) {
      const Real r = level_radius(options.scale_base, m);
      for (Real t : fractions) {
        for (Real sign : {Real(1), Real(-1)}) {
          Real s = mid + sign * r * t;
          Real h = std::fabs(s - mid);
          if (!(h > 0)) continue;
          Real q = (std::fabs(f(c.position(s)) - f0) - 2 * options.evaluation_error) / h;
          res.max_quotient = std::max(res.max_quotient, q);
          if (res.member && q > static_cast<Real>(n)) {
            res.member = false;
            res.witness_m = m;
            res.witness_s = s - mid;
          }
        }
      }
    }
    out.push_back(res);
  }
  return out;
}

}  // namespace holder
