#include "holder/exact.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace holder {

namespace {

using i128 = __int128;

BigInt big_pow(const BigInt& base, unsigned long exp) {
  BigInt out;
  mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(), exp);
  return out;
}

BigInt big_pow(std::int64_t base, unsigned long exp) { return big_pow(BigInt(static_cast<long>(base)), exp); }

BigInt floor_mod(const BigInt& a, const BigInt& n) {
  BigInt r;
  mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), n.get_mpz_t());
  return r;
}

bool fits_i64(const BigInt& z) { return mpz_fits_slong_p(z.get_mpz_t()) != 0; }

i128 to_i128(const BigInt& z) {
  // Only called for values already known to be below 2^126 in magnitude.
  BigInt mag = abs(z);
  i128 out = 0;
  const std::size_t limbs = mpz_size(mag.get_mpz_t());
  for (std::size_t i = limbs; i-- > 0;) {
    out = (out << 64) | static_cast<i128>(mpz_getlimbn(mag.get_mpz_t(), static_cast<mp_size_t>(i)));
  }
  return z < 0 ? -out : out;
}

BigInt from_i128(i128 v) {
  const bool negative = v < 0;
  unsigned __int128 mag = negative ? static_cast<unsigned __int128>(-v) : static_cast<unsigned __int128>(v);
  BigInt hi(static_cast<unsigned long>(mag >> 64));
  BigInt lo(static_cast<unsigned long>(mag & 0xFFFFFFFFFFFFFFFFull));
  BigInt out = (hi << 64) + lo;
  return negative ? BigInt(-out) : out;
}

// Per-level constants shared by every increment at level m. With
// D = A^m b^m (A = base^alpha), Phi((j+1)/b^m) - Phi(j/b^m) = N / D where
// N = sum_k sigma_k w_k, w_k = A^{m-k} b^k, and sigma_k = +1 exactly when
// j mod 2 b^{m-k} < b^{m-k}.
struct Level {
  unsigned m = 0;
  std::vector<BigInt> half_period;
  std::vector<BigInt> weight;
  BigInt denom;
  BigInt ratio_factor;   // b - A
  BigInt ratio_den;      // (b - 2A) b^m
  // |N|/D >= M A^{-m}  <=>  |N| (b - A) >= (b - 2A) b^m

  bool fast = false;
  std::vector<std::int64_t> half_period64;
  std::vector<i128> weight128;
  i128 ratio_factor128 = 0;
  i128 ratio_den128 = 0;

  Level(const ExactParams& ep, unsigned level) : m(level) {
    const BigInt& a = ep.base_pow_alpha();
    const BigInt b(static_cast<long>(ep.base()));
    for (unsigned k = 0; k <= m; ++k) {
      half_period.push_back(big_pow(b, m - k));
      weight.push_back(big_pow(a, m - k) * big_pow(b, k));
    }
    denom = big_pow(a, m) * big_pow(b, m);
    ratio_factor = b - a;
    ratio_den = (b - 2 * a) * big_pow(b, m);

    const BigInt limit62 = BigInt(1) << 62;
    const BigInt limit120 = BigInt(1) << 120;
    fast = 2 * half_period.front() <= limit62 && denom * (m + 1) * ratio_factor < limit120 &&
           ratio_den < limit120;
    if (fast) {
      for (unsigned k = 0; k <= m; ++k) {
        half_period64.push_back(half_period[k].get_si());
        weight128.push_back(to_i128(weight[k]));
      }
      ratio_factor128 = to_i128(ratio_factor);
      ratio_den128 = to_i128(ratio_den);
    }
  }

  i128 numerator_fast(std::int64_t j) const {
    i128 n = 0;
    for (unsigned k = 0; k <= m; ++k) {
      const std::int64_t l = half_period64[k];
      std::int64_t r = j % (2 * l);
      if (r < 0) r += 2 * l;
      n += r < l ? weight128[k] : -weight128[k];
    }
    return n;
  }

  BigInt numerator(const BigInt& j) const {
    BigInt n = 0;
    for (unsigned k = 0; k <= m; ++k) {
      const BigInt r = floor_mod(j, 2 * half_period[k]);
      if (r < half_period[k]) {
        n += weight[k];
      } else {
        n -= weight[k];
      }
    }
    return n;
  }

  IncrementRow row(const BigInt& j, const BigInt& n) const {
    IncrementRow out;
    out.m = m;
    out.j = j;
    out.delta = Rational(n, denom);
    out.delta.canonicalize();
    out.ratio = Rational(abs(n) * ratio_factor, ratio_den);
    out.ratio.canonicalize();
    out.pass = abs(n) * ratio_factor >= ratio_den;
    return out;
  }

  Rational ratio_of(const BigInt& abs_n) const {
    Rational r(abs_n * ratio_factor, ratio_den);
    r.canonicalize();
    return r;
  }

  Rational increment_of(const BigInt& abs_n) const {
    Rational r(abs_n, denom);
    r.canonicalize();
    return r;
  }
};

struct ScanPart {
  std::uint64_t checked = 0;
  BigInt min_abs;
  BigInt argmin;
  BigInt max_abs;
  BigInt argmax;
  std::uint64_t violation_count = 0;
  std::vector<BigInt> violations;
  bool empty = true;
};

ScanPart scan_fast(const Level& level, std::int64_t lo, std::int64_t hi) {
  ScanPart part;
  if (lo >= hi) return part;
  i128 min_abs = -1;
  i128 max_abs = -1;
  std::int64_t argmin = lo;
  std::int64_t argmax = lo;
  for (std::int64_t j = lo; j < hi; ++j) {
    i128 n = level.numerator_fast(j);
    if (n < 0) n = -n;
    if (min_abs < 0 || n < min_abs) {
      min_abs = n;
      argmin = j;
    }
    if (n > max_abs) {
      max_abs = n;
      argmax = j;
    }
    if (n * level.ratio_factor128 < level.ratio_den128) {
      if (part.violations.size() < BoundReport::kMaxListedViolations) {
        part.violations.emplace_back(static_cast<long>(j));
      }
      ++part.violation_count;
    }
  }
  part.empty = false;
  part.checked = static_cast<std::uint64_t>(hi - lo);
  part.min_abs = from_i128(min_abs);
  part.max_abs = from_i128(max_abs);
  part.argmin = BigInt(static_cast<long>(argmin));
  part.argmax = BigInt(static_cast<long>(argmax));
  return part;
}

ScanPart scan_general(const Level& level, const BigInt& lo, const BigInt& hi) {
  ScanPart part;
  for (BigInt j = lo; j < hi; ++j) {
    const BigInt n = abs(level.numerator(j));
    if (part.empty || n < part.min_abs) {
      part.min_abs = n;
      part.argmin = j;
    }
    if (part.empty || n > part.max_abs) {
      part.max_abs = n;
      part.argmax = j;
    }
    part.empty = false;
    if (n * level.ratio_factor < level.ratio_den) {
      if (part.violations.size() < BoundReport::kMaxListedViolations) part.violations.push_back(j);
      ++part.violation_count;
    }
    ++part.checked;
  }
  return part;
}

// Ties resolve to the smaller j because parts arrive in ascending order and
// only strict improvements replace the running extremum.
void merge(ScanPart& into, ScanPart&& part) {
  if (part.empty) return;
  if (into.empty) {
    into = std::move(part);
    return;
  }
  into.checked += part.checked;
  if (part.min_abs < into.min_abs) {
    into.min_abs = part.min_abs;
    into.argmin = part.argmin;
  }
  if (part.max_abs > into.max_abs) {
    into.max_abs = part.max_abs;
    into.argmax = part.argmax;
  }
  into.violation_count += part.violation_count;
  for (auto& v : part.violations) {
    if (into.violations.size() >= BoundReport::kMaxListedViolations) break;
    into.violations.push_back(std::move(v));
  }
}

ScanPart scan(const Level& level, const BigInt& lo, const BigInt& hi, unsigned threads) {
  const BigInt limit = BigInt(1) << 62;
  const bool fast = level.fast && fits_i64(lo) && fits_i64(hi) && abs(lo) < limit && abs(hi) < limit;
  if (!fast) return scan_general(level, lo, hi);

  const std::int64_t a = lo.get_si();
  const std::int64_t b = hi.get_si();
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const auto span = static_cast<std::uint64_t>(b - a);
  threads = static_cast<unsigned>(std::clamp<std::uint64_t>(span / 65536, 1, threads));
  std::vector<ScanPart> parts(threads);
  auto work = [&](unsigned w) {
    const auto from = a + static_cast<std::int64_t>(span * w / threads);
    const auto to = a + static_cast<std::int64_t>(span * (w + 1) / threads);
    parts[w] = scan_fast(level, from, to);
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }
  ScanPart total;
  for (auto& p : parts) merge(total, std::move(p));
  return total;
}

void check_budget(const BigInt& count, const ScanOptions& options) {
  if (count > BigInt(static_cast<unsigned long>(options.budget))) {
    throw Error(ErrorCode::RangeTooLarge, "scan of " + count.get_str() + " intervals exceeds the budget of " +
                                              std::to_string(options.budget));
  }
}

}  // namespace

ExactParams make_exact_params(const Rational& alpha_in, std::int64_t base) {
  Rational alpha = alpha_in;
  alpha.canonicalize();
  if (!(alpha > 0 && alpha < 1)) {
    throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in (0, 1), got " + alpha.get_str());
  }
  if (base < 2 || base % 2 != 0) {
    throw Error(ErrorCode::BaseNotEven, "base must be an even integer >= 2, got " + std::to_string(base));
  }
  const BigInt b(static_cast<long>(base));
  if (!alpha.get_den().fits_ulong_p()) throw Error(ErrorCode::InexactBase, "alpha denominator too large");
  BigInt root;
  if (!exact_root(b, alpha.get_den().get_ui(), root)) {
    throw Error(ErrorCode::InexactBase, std::to_string(base) + "^(" + alpha.get_str() + ") is not an integer");
  }
  const BigInt balpha = big_pow(root, alpha.get_num().get_ui());
  if (!(b > 2 * balpha)) {
    throw Error(ErrorCode::GapConditionViolated,
                "base^(1-alpha) = " + Rational(b, balpha).get_str() + " is not > 2");
  }
  Rational m(b - 2 * balpha, b - balpha);
  m.canonicalize();
  return ExactParams(validate_params(alpha.get_d(), base), alpha, balpha, m);
}

BAdicPoint BAdicPoint::make(BigInt j, unsigned m, std::int64_t base) {
  if (base < 2) throw Error(ErrorCode::InvalidArgument, "base must be >= 2");
  const BigInt b(static_cast<long>(base));
  while (m > 0 && floor_mod(j, b) == 0) {
    j /= b;
    --m;
  }
  return BAdicPoint(std::move(j), m, base);
}

Rational BAdicPoint::value() const {
  Rational r(j_, big_pow(base_, m_));
  r.canonicalize();
  return r;
}

Rational eval_exact(const ExactParams& ep, const BAdicPoint& pt) {
  if (pt.base() != ep.base()) {
    throw Error(ErrorCode::InvalidArgument, "point base " + std::to_string(pt.base()) +
                                                " does not match series base " + std::to_string(ep.base()));
  }
  const unsigned m = pt.m();
  const BigInt& a = ep.base_pow_alpha();
  BigInt n = 0;
  for (unsigned k = 0; k <= m; ++k) {
    // sawtooth(j b^{k-m}) = dist(j, 2L Z) / L with L = b^{m-k}
    const BigInt half = big_pow(ep.base(), m - k);
    const BigInt r = floor_mod(pt.j(), 2 * half);
    const BigInt d = r <= half ? r : BigInt(2 * half - r);
    n += d * big_pow(a, m - k) * big_pow(ep.base(), k);
  }
  Rational out(n, big_pow(a, m) * big_pow(ep.base(), m));
  out.canonicalize();
  return out;
}

Rational increment(const ExactParams& ep, unsigned m, const BigInt& j) {
  const Level level(ep, m);
  return level.row(j, level.numerator(j)).delta;
}

Rational increment_floor(const ExactParams& ep, unsigned m) {
  Rational out(ep.increment_constant().get_num(), ep.increment_constant().get_den() * big_pow(ep.base_pow_alpha(), m));
  out.canonicalize();
  return out;
}

void for_each_increment(const ExactParams& ep, unsigned m, const BigInt& j_lo, const BigInt& j_hi,
                        const std::function<void(const IncrementRow&)>& visit, const ScanOptions& options) {
  if (!(j_lo < j_hi)) throw Error(ErrorCode::InvalidArgument, "empty j range");
  check_budget(j_hi - j_lo, options);
  const Level level(ep, m);
  const BigInt limit = BigInt(1) << 62;
  const bool fast = level.fast && fits_i64(j_lo) && fits_i64(j_hi) && abs(j_lo) < limit && abs(j_hi) < limit;
  for (BigInt j = j_lo; j < j_hi; ++j) {
    const BigInt n = fast ? from_i128(level.numerator_fast(j.get_si())) : level.numerator(j);
    visit(level.row(j, n));
  }
}

BoundReport verify_increment_bound(const ExactParams& ep, unsigned m, const BigInt& j_lo, const BigInt& j_hi,
                                   const ScanOptions& options) {
  if (!(j_lo < j_hi)) throw Error(ErrorCode::InvalidArgument, "j_lo must be < j_hi");
  check_budget(j_hi - j_lo, options);
  const Level level(ep, m);
  ScanPart part = scan(level, j_lo, j_hi, options.threads);

  BoundReport report;
  report.m = m;
  report.j_lo = j_lo;
  report.j_hi = j_hi;
  report.checked = part.checked;
  report.min_ratio = level.ratio_of(part.min_abs);
  report.argmin = part.argmin;
  report.max_abs_increment = level.increment_of(part.max_abs);
  report.argmax = part.argmax;
  report.violation_count = part.violation_count;
  report.violations = std::move(part.violations);
  return report;
}

std::vector<GrowthRow> quotient_growth(const ExactParams& ep, const Rational& beta_in, unsigned m_max,
                                       const ScanOptions& options) {
  Rational beta = beta_in;
  beta.canonicalize();
  if (beta < ep.alpha()) {
    throw Error(ErrorCode::InvalidArgument, "beta " + beta.get_str() + " must be >= alpha " + ep.alpha().get_str());
  }
  for (unsigned m = 0; m <= m_max; ++m) check_budget(2 * big_pow(ep.base(), m), options);

  // base^beta exactly, when it is an integer
  std::optional<BigInt> bbeta;
  if (beta.get_den().fits_ulong_p() && beta.get_num().fits_ulong_p()) {
    BigInt root;
    if (exact_root(BigInt(static_cast<long>(ep.base())), beta.get_den().get_ui(), root)) {
      bbeta = big_pow(root, beta.get_num().get_ui());
    }
  }

  const double b = static_cast<double>(ep.base());
  const double beta_d = beta.get_d();
  const double m_const = ep.increment_constant().get_d();
  const double alpha_d = ep.alpha().get_d();

  std::vector<GrowthRow> rows;
  for (unsigned m = 0; m <= m_max; ++m) {
    const Level level(ep, m);
    ScanPart part = scan(level, BigInt(0), 2 * big_pow(ep.base(), m), options.threads);
    GrowthRow row;
    row.m = m;
    row.max_increment = level.increment_of(part.max_abs);
    row.argmax = part.argmax;
    row.quotient = row.max_increment.get_d() * std::pow(b, beta_d * m);
    row.floor = m_const * std::pow(b, m * (beta_d - alpha_d));
    if (bbeta) {
      const BigInt scale = big_pow(*bbeta, m);
      Rational q = row.max_increment * Rational(scale);
      q.canonicalize();
      Rational f(ep.increment_constant().get_num() * scale,
                 ep.increment_constant().get_den() * big_pow(ep.base_pow_alpha(), m));
      f.canonicalize();
      row.quotient_exact = q;
      row.floor_exact = f;
    }
    row.pass = row.max_increment >= increment_floor(ep, m);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace holder
