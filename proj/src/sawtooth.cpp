#include "holder/sawtooth.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <thread>

namespace holder {

namespace {

using u128 = unsigned __int128;

constexpr std::int64_t kMaxTerms = 1'000'000;

Real to_real(const mpz_class& z) {
  const std::size_t bits = mpz_sizeinbase(z.get_mpz_t(), 2);
  if (bits <= 64) return static_cast<Real>(mpz_get_ui(z.get_mpz_t()));
  mpz_class top;
  mpz_fdiv_q_2exp(top.get_mpz_t(), z.get_mpz_t(), bits - 64);
  return std::ldexp(static_cast<Real>(mpz_get_ui(top.get_mpz_t())), static_cast<int>(bits - 64));
}

// Tracks R_k = M t^k mod 2^{P_k} for x = M 2^e and base = 2^s t (t odd), where
// P_k = 1 - e - s k. Then base^k x mod 2 = R_k 2^{-(P_k - 1)} exactly. The
// residue lives in a 128-bit word once it fits, in a GMP integer before that.
class ResidueWalker {
 public:
  ResidueWalker(std::uint64_t mantissa, std::int64_t width, std::uint64_t odd_factor)
      : width_(width), odd_(odd_factor), odd_bits_(std::bit_width(odd_factor)) {
    if (fits()) {
      small_ = mantissa;
    } else {
      wide_ = true;
      big_ = static_cast<unsigned long>(mantissa);
    }
  }

  std::int64_t width() const noexcept { return width_; }

  // sawtooth(base^k x), rounded once to working precision.
  Real sawtooth_value() const {
    const int scale = static_cast<int>(-(width_ - 1));
    if (!wide_) {
      const u128 full = u128{1} << width_;
      const u128 half = u128{1} << (width_ - 1);
      const u128 d = small_ <= half ? small_ : full - small_;
      return std::ldexp(static_cast<Real>(d), scale);
    }
    mpz_class full;
    mpz_ui_pow_ui(full.get_mpz_t(), 2, static_cast<unsigned long>(width_));
    mpz_class half = full / 2;
    mpz_class d = big_ <= half ? big_ : mpz_class(full - big_);
    return std::ldexp(to_real(d), scale);
  }

  // Moves to k+1; the new width may be <= 0, meaning base^{k+1} x is even.
  void advance(std::int64_t shift) {
    width_ -= shift;
    if (width_ <= 0) return;
    if (!wide_) {
      small_ = (small_ * odd_) & ((u128{1} << width_) - 1);
      return;
    }
    big_ *= static_cast<unsigned long>(odd_);
    mpz_fdiv_r_2exp(big_.get_mpz_t(), big_.get_mpz_t(), static_cast<mp_bitcnt_t>(width_));
    if (fits()) {
      wide_ = false;
      small_ = 0;
      const std::size_t limbs = mpz_size(big_.get_mpz_t());
      for (std::size_t i = limbs; i-- > 0;) {
        small_ = (small_ << 64) | mpz_getlimbn(big_.get_mpz_t(), static_cast<mp_size_t>(i));
      }
    }
  }

 private:
  bool fits() const noexcept { return width_ + odd_bits_ <= 128; }

  std::int64_t width_;
  std::uint64_t odd_;
  std::int64_t odd_bits_;
  bool wide_ = false;
  u128 small_ = 0;
  mpz_class big_;
};

Real unit_roundoff() { return std::numeric_limits<Real>::epsilon() / 2; }

Real rounding_budget(const SeriesParams& params, std::int64_t last_term) {
  return 2 * static_cast<Real>(last_term + 2) * unit_roundoff() * static_cast<Real>(params.series_bound());
}

}  // namespace

double sawtooth(double x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "sawtooth argument is not finite");
  const double r = std::fmod(std::fabs(x), 2.0);
  return r <= 1.0 ? r : 2.0 - r;
}

Real sawtooth(Real x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "sawtooth argument is not finite");
  const Real r = std::fmod(std::fabs(x), Real{2});
  return r <= 1 ? r : 2 - r;
}

SeriesParams validate_params(double alpha, std::int64_t base) {
  if (!std::isfinite(alpha) || !(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  if (base < 2 || base % 2 != 0) {
    throw Error(ErrorCode::BaseNotEven, "base must be an even integer >= 2, got " + std::to_string(base));
  }
  const double b = static_cast<double>(base);
  const double gap = std::pow(b, 1.0 - alpha);
  if (!(gap > 2.0)) {
    throw Error(ErrorCode::GapConditionViolated,
                "base^(1-alpha) = " + std::to_string(gap) + " is not > 2");
  }
  SeriesParams p;
  p.alpha_ = alpha;
  p.base_ = base;
  const double q = std::pow(b, -alpha);
  p.holder_c_ = gap / (1.0 - 1.0 / gap) + q / (1.0 - q);
  p.increment_m_ = 1.0 - 1.0 / (gap - 1.0);
  p.series_bound_ = 1.0 / (1.0 - q);
  return p;
}

Real tail_bound_ext(const SeriesParams& params, std::int64_t last_term) {
  if (last_term < 0) throw Error(ErrorCode::InvalidArgument, "term index must be nonnegative");
  const Real b = static_cast<Real>(params.base());
  const Real a = static_cast<Real>(params.alpha());
  return std::pow(b, -static_cast<Real>(last_term + 1) * a) / (1 - std::pow(b, -a));
}

double tail_bound(const SeriesParams& params, std::int64_t last_term) {
  return static_cast<double>(tail_bound_ext(params, last_term));
}

std::int64_t terms_for_tolerance(const SeriesParams& params, Real tol) {
  if (!(tol > 0) || !std::isfinite(tol)) {
    throw Error(ErrorCode::InvalidArgument, "tolerance must be positive and finite");
  }
  const Real b = static_cast<Real>(params.base());
  const Real a = static_cast<Real>(params.alpha());
  const Real q = std::pow(b, -a);
  const Real needed = std::log(1 / (tol * (1 - q))) / (a * std::log(b));
  if (needed > static_cast<Real>(kMaxTerms)) {
    throw Error(ErrorCode::TolTooSmall, "tolerance requires more than " + std::to_string(kMaxTerms) + " terms");
  }
  std::int64_t k = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(needed)) - 1);
  while (k > 0 && tail_bound_ext(params, k - 1) <= tol) --k;
  while (tail_bound_ext(params, k) > tol) ++k;
  return k;
}

SeriesEvaluation evaluate(const SeriesParams& params, Real x, Real tol) {
  if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "series argument is not finite");
  const std::int64_t last = terms_for_tolerance(params, tol);
  const Real rounding = rounding_budget(params, last);
  if (tol < rounding) {
    throw Error(ErrorCode::TolTooSmall, "tolerance is below the summation rounding floor " +
                                            std::to_string(static_cast<double>(rounding)));
  }

  SeriesEvaluation out;
  const Real y = std::fmod(std::fabs(x), Real{2});
  if (y == 0) {
    out.terminated_exactly = true;
    return out;
  }

  int exponent = 0;
  const Real frac = std::frexp(y, &exponent);
  std::uint64_t mantissa = static_cast<std::uint64_t>(std::ldexp(frac, 64));
  std::int64_t e = static_cast<std::int64_t>(exponent) - 64;
  const int tz = std::countr_zero(mantissa);
  mantissa >>= tz;
  e += tz;

  const auto base = static_cast<std::uint64_t>(params.base());
  const std::int64_t shift = std::countr_zero(base);
  const std::uint64_t odd = base >> shift;

  ResidueWalker walker(mantissa, 1 - e, odd);
  const Real ratio = std::pow(static_cast<Real>(params.base()), -static_cast<Real>(params.alpha()));
  Real weight = 1;
  Real sum = 0;
  out.last_term = last;
  for (std::int64_t k = 0; k <= last; ++k) {
    if (walker.width() <= 0) {
      out.terminated_exactly = true;
      out.last_term = k - 1;
      break;
    }
    sum += weight * walker.sawtooth_value();
    weight *= ratio;
    walker.advance(shift);
  }
  if (!out.terminated_exactly && walker.width() <= 0) out.terminated_exactly = true;

  out.value = sum;
  out.truncation_bound = out.terminated_exactly ? Real{0} : tail_bound_ext(params, last);
  out.error_bound = out.truncation_bound + rounding;
  return out;
}

double eval_phi(const SeriesParams& params, double x, double tol) {
  return static_cast<double>(evaluate(params, static_cast<Real>(x), static_cast<Real>(tol)).value);
}

Real eval_phi_ext(const SeriesParams& params, Real x, Real tol) { return evaluate(params, x, tol).value; }

BatchEvaluation eval_phi_batch(const SeriesParams& params, std::span<const double> points, double tol,
                               unsigned threads) {
  BatchEvaluation out;
  out.values.assign(points.size(), std::numeric_limits<double>::quiet_NaN());
  if (points.empty()) return out;

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, points.size()));
  std::vector<std::vector<BatchFailure>> failures(threads);

  auto work = [&](unsigned w) {
    const std::size_t lo = points.size() * w / threads;
    const std::size_t hi = points.size() * (w + 1) / threads;
    for (std::size_t i = lo; i < hi; ++i) {
      try {
        out.values[i] = eval_phi(params, points[i], tol);
      } catch (const Error& err) {
        failures[w].push_back({i, err.code(), err.what()});
      }
    }
  };

  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }
  for (auto& chunk : failures) {
    out.failures.insert(out.failures.end(), chunk.begin(), chunk.end());
  }
  return out;
}

}  // namespace holder
