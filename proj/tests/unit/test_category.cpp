#include <cmath>
#include <numbers>

#include "doctest.h"
#include "holder/category.hpp"

using namespace holder;

namespace {
ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected holder::Error");
  return ErrorCode::InvalidArgument;
}

// Positions on a fine grid, measured directly against the box walls.
Real min_wall_distance(const TestCurve& c, const BoxDomain& box) {
  Real best = 1e30L;
  for (int i = 0; i <= 2000; ++i) {
    Real s = c.domain().lo + c.domain().length() * i / 2000;
    auto p = c.position(s);
    for (std::size_t j = 0; j < p.size(); ++j) best = std::min({best, p[j] - box.lo[j], box.hi[j] - p[j]});
  }
  return best;
}
}  // namespace

TEST_CASE("box and margin arithmetic") {
  auto spec = make_family_spec(4, 1, make_box({0, 0}, {1, 1}));
  auto k = margin_box(spec);
  CHECK(k.lo == Point{0.25L, 0.25L});
  CHECK(k.hi == Point{0.75L, 0.75L});
  auto curves = sample_family(spec, 20, 1);
  for (const auto& c : curves) CHECK(c.domain().length() == doctest::Approx(0.5));

  CHECK(code_of([] { make_family_spec(10, 1, make_box({0, 0}, {1, 0.1L})); }) == ErrorCode::EmptyMargin);
  CHECK(code_of([] { make_family_spec(1, 1, make_box({0, 0}, {1, 1})); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { make_family_spec(3, 1.5L, make_box({0, 0}, {1, 1})); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { make_box({0, 0}, {1, 0}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("quadratic baseline") {
  QuadraticBaseline q({{0, 0, 1}, {0, 0, 1}});
  CHECK(q({0.5L, 0.25L}) == doctest::Approx(0.3125));
  auto box = make_box({0, 0}, {1, 1});
  Real g = q.gradient_bound(box);
  CHECK(g >= 2 * std::sqrt(Real(2)));
  CHECK(g <= 2 * std::sqrt(Real(2)) * (1 + 1e-15L));
  // Interval hull of 3 - 4x on [-1, 2] is [-5, 7].
  QuadraticBaseline r({{1, 3, -2}});
  CHECK(r.gradient_bound(make_box({-1}, {2})) == doctest::Approx(7));
  CHECK(code_of([&] { q({1}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("sampled curves satisfy the family conditions") {
  for (int n : {5, 8, 10}) {
    auto spec = make_family_spec(n, 1, make_box({0, 0}, {1, 1}));
    auto curves = sample_family(spec, 60, 100 + n);
    int arcs = 0;
    for (const auto& c : curves) {
      CHECK(validate_curve(c, 101, 1e-9L).passed());
      auto chk = check_family_conditions(c, spec);
      CHECK(chk.passed());
      CHECK(chk.max_holder_ratio <= n);
      CHECK(min_wall_distance(c, spec.domain) >= 1.0L / n - 1e-15L);
      arcs += std::holds_alternative<ArcShape>(c.shape());
    }
    CHECK(arcs > 0);
    CHECK(arcs < 60);
  }
  // Lines only in 3-D, with gamma < 1.
  auto spec3 = make_family_spec(6, 0.5L, make_box({0, 0, 0}, {1, 2, 1}));
  for (const auto& c : sample_family(spec3, 30, 4)) {
    CHECK(std::holds_alternative<LineShape>(c.shape()));
    CHECK(check_family_conditions(c, spec3).passed());
  }
}

TEST_CASE("family checker catches violations") {
  auto spec = make_family_spec(4, 1, make_box({0, 0}, {1, 1}));
  auto tight = make_arc({0.5L, 0.5L}, 0.2L, 0, 0.25L);  // rho = 5 > n
  auto chk = check_family_conditions(tight, spec);
  CHECK_FALSE(chk.derivative_ok);
  auto near_wall = make_line({0.2L, 0.5L}, {0, 1}, 0.25L);
  CHECK_FALSE(check_family_conditions(near_wall, spec).margin_ok);
  auto wrong_len = make_line({0.5L, 0.5L}, {0, 1}, 0.2L);
  CHECK_FALSE(check_family_conditions(wrong_len, spec).domain_ok);
}

TEST_CASE("sample_family determinism and retry cap") {
  auto spec = make_family_spec(10, 1, make_box({0, 0}, {1, 1}));
  auto a = sample_family(spec, 10, 77), b = sample_family(spec, 10, 77), c = sample_family(spec, 10, 78);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].position(0.05L) == b[i].position(0.05L));
    differs |= a[i].position(0.05L) != c[i].position(0.05L);
  }
  CHECK(differs);
  // K_2 of the unit square is a single point, so no curve of length 1 fits.
  auto point_margin = make_family_spec(2, 1, make_box({0, 0}, {1, 1}));
  CHECK(code_of([&] { sample_family(point_margin, 1, 1, 50); }) == ErrorCode::RetryExhausted);
  CHECK(code_of([&] { sample_family(spec, 0, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("perturbation experiment") {
  auto f = build_separable({0.6, 0.8}, 1);
  QuadraticBaseline f0({{0, 0, 1}, {0, 0, 1}});
  auto spec = make_family_spec(10, 1, make_box({0, 0}, {1, 1}));
  constexpr std::uint64_t kSeed = 20240601;

  auto rep = perturbation_experiment(f0, f, 0.01L, spec, 100, kSeed);
  CHECK(rep.scale_base == 34);
  CHECK(rep.escape_fraction == 1.0);
  CHECK(rep.undecided == 0);
  REQUIRE(rep.max_escape_m);
  // Oracle run of this configuration: deepest escape level 7.
  CHECK(*rep.max_escape_m == 7);

  // Same seed, same report.
  auto again = perturbation_experiment(f0, f, 0.01L, spec, 100, kSeed);
  for (std::size_t i = 0; i < rep.verdicts.size(); ++i) CHECK(again.verdicts[i].escape_m == rep.verdicts[i].escape_m);

  // Doubling delta never delays an escape.
  auto twice = perturbation_experiment(f0, f, 0.02L, spec, 100, kSeed);
  for (std::size_t i = 0; i < rep.verdicts.size(); ++i) {
    REQUIRE(twice.verdicts[i].escape_m);
    CHECK(*twice.verdicts[i].escape_m <= *rep.verdicts[i].escape_m);
  }

  auto control = perturbation_experiment(f0, f, 0, spec, 100, kSeed);
  CHECK(control.gradient_bound <= spec.n);
  CHECK(control.escape_fraction == 0.0);
  CHECK(control.undecided == 100);

  CHECK(code_of([&] { perturbation_experiment(f0, f, -1, spec, 10, 1); }) == ErrorCode::InvalidArgument);
  QuadraticBaseline q3({{0, 0, 1}, {0, 0, 1}, {0, 0, 1}});
  CHECK(code_of([&] { perturbation_experiment(q3, f, 0.01L, spec, 10, 1); }) == ErrorCode::DimensionMismatch);
}
