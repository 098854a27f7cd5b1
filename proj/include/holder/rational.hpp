#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace holder {

using Rational = mpq_class;
using BigInt = mpz_class;

/// Accepts "p/q", integers and finite decimals ("0.75" is exactly 3/4).
/// Throws ParseError otherwise. The result is canonical.
Rational parse_rational(std::string_view text);

/// Decimal expansion truncated toward zero after `digits` fractional digits;
/// exact (no trailing ellipsis) when the expansion terminates earlier.
std::string to_decimal(const Rational& value, int digits = 40);

/// Exact integer q-th root if one exists.
bool exact_root(const BigInt& value, unsigned long degree, BigInt& root);

}  // namespace holder
