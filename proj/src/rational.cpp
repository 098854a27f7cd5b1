#include "holder/rational.hpp"

#include <cctype>

#include "holder/error.hpp"

namespace holder {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

BigInt parse_integer(std::string_view s, std::string_view whole) {
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (!all_digits(s)) throw Error(ErrorCode::ParseError, "not a rational: '" + std::string(whole) + "'");
  BigInt z(std::string(s), 10);
  return negative ? BigInt(-z) : z;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) throw Error(ErrorCode::ParseError, "empty rational");

  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const BigInt num = parse_integer(text.substr(0, slash), text);
    const std::string_view den_text = text.substr(slash + 1);
    if (!all_digits(den_text)) throw Error(ErrorCode::ParseError, "bad denominator in '" + std::string(text) + "'");
    const BigInt den(std::string(den_text), 10);
    if (den == 0) throw Error(ErrorCode::ParseError, "zero denominator in '" + std::string(text) + "'");
    Rational r(num, den);
    r.canonicalize();
    return r;
  }

  if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view int_part = text.substr(0, dot);
    const std::string_view frac_part = text.substr(dot + 1);
    bool negative = false;
    if (!int_part.empty() && (int_part.front() == '-' || int_part.front() == '+')) {
      negative = int_part.front() == '-';
      int_part.remove_prefix(1);
    }
    if ((int_part.empty() && frac_part.empty()) || (!int_part.empty() && !all_digits(int_part)) ||
        (!frac_part.empty() && !all_digits(frac_part))) {
      throw Error(ErrorCode::ParseError, "not a decimal: '" + std::string(text) + "'");
    }
    BigInt num(std::string(int_part.empty() ? "0" : int_part) + std::string(frac_part), 10);
    BigInt den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, frac_part.size());
    Rational r(negative ? BigInt(-num) : num, den);
    r.canonicalize();
    return r;
  }

  return Rational(parse_integer(text, text));
}

std::string to_decimal(const Rational& value, int digits) {
  BigInt num = value.get_num();
  const BigInt& den = value.get_den();
  std::string out;
  if (num < 0) {
    out.push_back('-');
    num = -num;
  }
  BigInt whole = num / den;
  BigInt rem = num % den;
  out += whole.get_str();
  if (rem == 0 || digits <= 0) return out;
  out.push_back('.');
  for (int i = 0; i < digits && rem != 0; ++i) {
    rem *= 10;
    BigInt d = rem / den;
    rem %= den;
    out += d.get_str();
  }
  return out;
}

bool exact_root(const BigInt& value, unsigned long degree, BigInt& root) {
  if (value < 0 || degree == 0) return false;
  return mpz_root(root.get_mpz_t(), value.get_mpz_t(), degree) != 0;
}

}  // namespace holder
