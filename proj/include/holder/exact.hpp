#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "holder/rational.hpp"
#include "holder/sawtooth.hpp"

namespace holder {

/// Series parameters for which every weight base^{-k alpha} is rational:
/// alpha = p/q in lowest terms and base = a^q, so base^alpha = a^p.
class ExactParams {
 public:
  const SeriesParams& params() const noexcept { return params_; }
  const Rational& alpha() const noexcept { return alpha_; }
  std::int64_t base() const noexcept { return params_.base(); }
  /// base^alpha as an integer.
  const BigInt& base_pow_alpha() const noexcept { return balpha_; }
  /// M = 1 - 1/(base^{1-alpha} - 1) = (base - 2 base^alpha) / (base - base^alpha).
  const Rational& increment_constant() const noexcept { return increment_m_; }

 private:
  friend ExactParams make_exact_params(const Rational& alpha, std::int64_t base);
  ExactParams(SeriesParams params, Rational alpha, BigInt balpha, Rational m)
      : params_(params), alpha_(std::move(alpha)), balpha_(std::move(balpha)), increment_m_(std::move(m)) {}

  SeriesParams params_;
  Rational alpha_;
  BigInt balpha_;
  Rational increment_m_;
};

/// Throws InexactBase when base^alpha is not an integer, plus everything
/// validate_params throws. The gap condition is decided exactly.
ExactParams make_exact_params(const Rational& alpha, std::int64_t base);

/// x = j / base^m, reduced so that base does not divide j unless m = 0.
class BAdicPoint {
 public:
  static BAdicPoint make(BigInt j, unsigned m, std::int64_t base);

  const BigInt& j() const noexcept { return j_; }
  unsigned m() const noexcept { return m_; }
  std::int64_t base() const noexcept { return base_; }
  Rational value() const;

 private:
  BAdicPoint(BigInt j, unsigned m, std::int64_t base) : j_(std::move(j)), m_(m), base_(base) {}
  BigInt j_;
  unsigned m_;
  std::int64_t base_;
};

/// Phi(j / base^m) as an exact rational; every term past k = m vanishes.
Rational eval_exact(const ExactParams& ep, const BAdicPoint& pt);

/// Phi((j+1)/base^m) - Phi(j/base^m), from the telescoped finite sum.
Rational increment(const ExactParams& ep, unsigned m, const BigInt& j);

/// M base^{-alpha m}, the guaranteed floor for |increment(m, j)|.
Rational increment_floor(const ExactParams& ep, unsigned m);

struct ScanOptions {
  std::uint64_t budget = 4'000'000;
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct IncrementRow {
  unsigned m = 0;
  BigInt j;
  Rational delta;
  /// |delta| / increment_floor(m).
  Rational ratio;
  bool pass = false;
};

/// Calls `visit` for every j in [j_lo, j_hi) in ascending order.
void for_each_increment(const ExactParams& ep, unsigned m, const BigInt& j_lo, const BigInt& j_hi,
                        const std::function<void(const IncrementRow&)>& visit,
                        const ScanOptions& options = {});

struct BoundReport {
  unsigned m = 0;
  BigInt j_lo;
  BigInt j_hi;
  std::uint64_t checked = 0;
  Rational min_ratio;
  BigInt argmin;
  Rational max_abs_increment;
  BigInt argmax;
  std::uint64_t violation_count = 0;
  /// First violations in ascending j, capped at kMaxListedViolations.
  std::vector<BigInt> violations;

  static constexpr std::size_t kMaxListedViolations = 64;
  bool passed() const noexcept { return violation_count == 0; }
};

/// Exhaustive exact check of |increment(m, j)| >= M base^{-alpha m} for
/// j in [j_lo, j_hi). Throws RangeTooLarge beyond options.budget intervals.
BoundReport verify_increment_bound(const ExactParams& ep, unsigned m, const BigInt& j_lo,
                                   const BigInt& j_hi, const ScanOptions& options = {});

struct GrowthRow {
  unsigned m = 0;
  /// max over one period of |increment(m, j)|.
  Rational max_increment;
  BigInt argmax;
  double quotient = 0;  // max_increment * base^{beta m}
  double floor = 0;     // M base^{m (beta - alpha)}
  /// Present when base^beta is an integer.
  std::optional<Rational> quotient_exact;
  std::optional<Rational> floor_exact;
  /// Decided exactly: max_increment >= increment_floor(m).
  bool pass = false;
};

/// One row per m in [0, m_max]; each row scans j in [0, 2 base^m).
std::vector<GrowthRow> quotient_growth(const ExactParams& ep, const Rational& beta, unsigned m_max,
                                       const ScanOptions& options = {});

}  // namespace holder
