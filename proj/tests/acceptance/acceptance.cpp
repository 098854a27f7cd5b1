// One PASS/FAIL line per acceptance criterion. With no arguments every
// criterion runs; "acceptance 3 5" runs a subset. Exit status is nonzero when
// any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "holder/category.hpp"
#include "holder/exact.hpp"
#include "holder/probe.hpp"
#include "holder/separable.hpp"

using namespace holder;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string printf_str(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

BigInt ipow(long b, unsigned long e) {
  BigInt out;
  mpz_ui_pow_ui(out.get_mpz_t(), static_cast<unsigned long>(b), e);
  return out;
}

Real unit(std::mt19937_64& rng) { return static_cast<Real>(rng() >> 11) * 0x1p-53L; }

// 1. |increment(m, j)| >= (2/3) 4^{-m} for j in [0, 2 16^m), m <= 5, exact.
Outcome exact_increment_bound() {
  auto ep = make_exact_params(Rational(1, 2), 16);
  std::uint64_t checked = 0, violations = 0;
  Rational worst = 100;
  for (unsigned m = 0; m <= 5; ++m) {
    Rational expected_floor(2, 3);
    expected_floor /= Rational(ipow(4, m));
    if (increment_floor(ep, m) != expected_floor) return {false, printf_str("floor mismatch at m=%u", m)};
    auto rep = verify_increment_bound(ep, m, 0, 2 * ipow(16, m));
    checked += rep.checked;
    violations += rep.violation_count;
    if (rep.min_ratio < worst) worst = rep.min_ratio;
  }
  return {violations == 0 && checked == 2236962,
          printf_str("%llu intervals, %llu violations, min ratio %s", static_cast<unsigned long long>(checked),
                     static_cast<unsigned long long>(violations), worst.get_str().c_str())};
}

// 2. Hoelder upper bound on 1e5 random pairs.
Outcome holder_upper_bound() {
  auto p = validate_params(0.5, 16);
  std::mt19937_64 rng(202402);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0;
  double worst = 0;
  for (int i = 0; i < 100000; ++i) {
    double x = u(rng), y = u(rng);
    // Every tenth pair is close together to exercise small gaps.
    if (i % 10 == 0) y = std::min(1.0, x + std::ldexp(u(rng), -static_cast<int>(rng() % 40)));
    double lhs = std::fabs(eval_phi(p, x, 1e-10) - eval_phi(p, y, 1e-10));
    double rhs = 17.0 / 3.0 * std::sqrt(std::fabs(x - y)) + 2e-9;
    if (lhs > rhs) ++violations;
    if (x != y) worst = std::max(worst, lhs / std::sqrt(std::fabs(x - y)));
  }
  return {violations == 0, printf_str("100000 pairs, %d violations, max |dPhi|/|dx|^0.5 = %.4f (C = 17/3)",
                                      violations, worst)};
}

// 3. Exponent recovery at 20 random centers per parameter set.
Outcome exponent_recovery() {
  struct Case {
    double alpha;
    std::int64_t base;
  };
  bool all = true;
  std::string detail;
  for (auto [alpha, base] : {Case{0.5, 16}, Case{0.6, 6}, Case{0.75, 256}}) {
    auto p = validate_params(alpha, base);
    const Real tol = 1e-15L;
    auto f = [&](Real x) { return eval_phi_ext(p, x, tol); };
    std::mt19937_64 rng(12345);
    double worst = 0, min_r2 = 1;
    int within = 0;
    for (int i = 0; i < 20; ++i) {
      Real x0 = unit(rng);
      auto prof = oscillation_profile(f, x0, {0, 7}, 256, 1000 + static_cast<std::uint64_t>(i), base);
      auto e = estimate_exponent(prof, 10 * tol);
      if (e.window_min != 2 || e.window_max != 7) return {false, "regression window is not [2, 7]"};
      double dev = std::fabs(e.alpha_hat - alpha);
      worst = std::max(worst, dev);
      min_r2 = std::min(min_r2, e.r_squared);
      if (dev <= 0.05 && e.r_squared >= 0.95) ++within;
    }
    bool ok = within == 20;
    all = all && ok;
    detail += printf_str("%s(%.2f,%lld): %d/20 ok, max |dev| %.4f, min R2 %.4f", detail.empty() ? "" : "; ", alpha,
                         static_cast<long long>(base), within, worst, min_r2);
  }
  return {all, detail};
}

// 4. Composite exponents along the unit arc at s0 = 0 and a diagonal line.
Outcome composite_exponents() {
  auto f = build_separable({0.6, 0.8}, 1);
  auto arc = make_arc({0, 0}, 1, 0, 1);
  const Real h = 1 / std::sqrt(Real(2));
  auto diag = make_line({0.37L, 0.61L}, {h, h}, 0.25L);
  const Real tol = 1e-15L;
  auto estimate = [&](const TestCurve& c) {
    auto g = [&](Real s) { return eval_separable(f, c.position(s), tol); };
    auto prof = oscillation_profile(g, 0, {6, 44}, 256, 41, 2);
    return estimate_exponent(prof, 10 * tol);
  };
  auto ea = estimate(arc), ed = estimate(diag);
  auto pa = predicted_exponent(f, arc, 0), pd = predicted_exponent(f, diag, 0);
  bool ok = ea.alpha_hat >= 0.73 && ea.alpha_hat <= 0.87 && ed.alpha_hat >= 0.53 && ed.alpha_hat <= 0.67 &&
            std::fabs(pa.alpha - 0.8) < 1e-12 && std::fabs(pd.alpha - 0.6) < 1e-12 &&
            std::fabs(ea.alpha_hat - pa.alpha) <= 0.07 && std::fabs(ed.alpha_hat - pd.alpha) <= 0.07;
  return {ok, printf_str("arc %.4f (predicted %.1f, R2 %.4f), diagonal %.4f (predicted %.1f, R2 %.4f), window [%d,%d]",
                         ea.alpha_hat, pa.alpha, ea.r_squared, ed.alpha_hat, pd.alpha, ed.r_squared, ea.window_min,
                         ea.window_max)};
}

// 5. Q_m >= (2/3) 4^m for m <= 5 and Q_5 / Q_1 >= 4^4, exact.
Outcome quotient_divergence() {
  auto ep = make_exact_params(Rational(1, 2), 16);
  auto rows = quotient_growth(ep, Rational(1), 5);
  bool ok = rows.size() == 6;
  for (const auto& r : rows) {
    if (!r.quotient_exact) return {false, "missing exact quotient"};
    Rational floor = Rational(2, 3) * Rational(ipow(4, r.m));
    ok = ok && *r.quotient_exact >= floor;
  }
  Rational ratio = *rows[5].quotient_exact / *rows[1].quotient_exact;
  ratio.canonicalize();
  ok = ok && ratio >= 256;
  return {ok, printf_str("Q_1 = %s, Q_5 = %s, Q_5/Q_1 = %s", rows[1].quotient_exact->get_str().c_str(),
                         rows[5].quotient_exact->get_str().c_str(), ratio.get_str().c_str())};
}

// 6. Perturbation escape and the smooth control.
Outcome perturbation_escape() {
  auto f = build_separable({0.6, 0.8}, 1);
  QuadraticBaseline f0({{0, 0, 1}, {0, 0, 1}});
  auto spec = make_family_spec(10, 1, make_box({0, 0}, {1, 1}));
  auto rep = perturbation_experiment(f0, f, 0.01L, spec, 100, 20240601);
  bool capped = true;
  for (const auto& v : rep.verdicts) capped = capped && v.escape_m && *v.escape_m <= 12;
  auto control = perturbation_experiment(f0, f, 0, spec, 100, 20240601);
  bool ok = rep.escape_fraction == 1.0 && capped && control.gradient_bound <= spec.n && control.escape_fraction == 0.0;
  return {ok, printf_str("escape fraction %.2f, deepest escape m = %d (cap 12, base %lld); control: gradient bound "
                         "%.4f <= n = 10, escape fraction %.2f",
                         rep.escape_fraction, rep.max_escape_m.value_or(-1), static_cast<long long>(rep.scale_base),
                         static_cast<double>(control.gradient_bound), control.escape_fraction)};
}

// 7. Float evaluation against exact values at 400 b-adic points.
Outcome cross_mode_agreement() {
  auto ep = make_exact_params(Rational(1, 2), 16);
  std::mt19937_64 rng(4004);
  double worst = 0;
  for (int i = 0; i < 400; ++i) {
    unsigned m = static_cast<unsigned>(rng() % 5);
    std::uint64_t span = 2ull << (4 * m);
    BigInt j(std::to_string(rng() % span));
    auto pt = BAdicPoint::make(j, m, 16);
    double exact = pt.value().get_d();
    double v = eval_phi(ep.params(), exact, 1e-12);
    worst = std::max(worst, std::fabs(v - eval_exact(ep, pt).get_d()));
  }
  return {worst <= 1e-9, printf_str("400 points, max |float - exact| = %.3e", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"exact increment lower bound, alpha=1/2 b=16, m<=5", exact_increment_bound},
      {"Hoelder upper bound on 1e5 pairs, alpha=1/2 b=16", holder_upper_bound},
      {"exponent recovery within 0.05, R2>=0.95, window [2,7]", exponent_recovery},
      {"composite exponents along arc and diagonal", composite_exponents},
      {"difference-quotient divergence, beta=1", quotient_divergence},
      {"perturbation escape with m<=12 and smooth control", perturbation_escape},
      {"float/exact agreement within 1e-9", cross_mode_agreement},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) selected.push_back(i);

  int failures = 0;
  for (int id : selected) {
    if (id < 1 || id > static_cast<int>(criteria.size())) {
      std::printf("FAIL [%d] unknown criterion\n", id);
      ++failures;
      continue;
    }
    const auto& [name, fn] = criteria[static_cast<std::size_t>(id - 1)];
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s [%d] %s: %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures ? 1 : 0;
}
