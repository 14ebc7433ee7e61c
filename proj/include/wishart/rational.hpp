#pragma once

// Exact rationals for shape/drift parameters and moment polynomials.

#include <boost/multiprecision/cpp_int.hpp>

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>

#include "wishart/errors.hpp"

namespace wishart {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

namespace detail {

inline BigInt pow10(int k) {
  BigInt r = 1;
  for (int i = 0; i < k; ++i) r *= 10;
  return r;
}

// Exact value of a decimal literal: [+-]digits[.digits][(e|E)[+-]digits].
inline Rational parse_decimal(std::string_view s) {
  if (s.empty()) throw InvalidInput("empty number");
  bool neg = false;
  std::size_t i = 0;
  if (s[0] == '+' || s[0] == '-') {
    neg = s[0] == '-';
    i = 1;
  }
  BigInt digits = 0;
  int frac = 0;
  bool any = false;
  bool dot = false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c >= '0' && c <= '9') {
      digits = digits * 10 + (c - '0');
      any = true;
      if (dot) ++frac;
    } else if (c == '.' && !dot) {
      dot = true;
    } else {
      break;
    }
  }
  if (!any) throw InvalidInput("not a number: '" + std::string(s) + "'");
  long exponent = 0;
  if (i < s.size()) {
    if (s[i] != 'e' && s[i] != 'E') throw InvalidInput("not a number: '" + std::string(s) + "'");
    ++i;
    const char* first = s.data() + i;
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, exponent);
    if (ec != std::errc() || ptr != last || exponent > 400 || exponent < -400) {
      throw InvalidInput("bad exponent in '" + std::string(s) + "'");
    }
  }
  const long shift = exponent - frac;
  Rational r = shift >= 0 ? Rational(digits * pow10(static_cast<int>(shift)))
                          : Rational(digits, pow10(static_cast<int>(-shift)));
  return neg ? Rational(-r) : r;
}

}  // namespace detail

/// Parses "a/b", integers and decimal literals ("1.25", "3e-2") exactly.
inline Rational parse_rational(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return detail::parse_decimal(text);
  const Rational num = detail::parse_decimal(text.substr(0, slash));
  const Rational den = detail::parse_decimal(text.substr(slash + 1));
  if (den == 0) throw InvalidInput("zero denominator in '" + std::string(text) + "'");
  return num / den;
}

/// The rational whose decimal expansion is the shortest round-trip
/// representation of d (so 0.1 maps to 1/10, not to its binary neighbour).
inline Rational rational_from_double(double d) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
  if (ec != std::errc()) throw InvalidInput("cannot format double");
  const std::string_view sv(buf, static_cast<std::size_t>(ptr - buf));
  if (sv == "inf" || sv == "-inf" || sv == "nan" || sv == "-nan") {
    throw InvalidInput("non-finite value has no rational form");
  }
  return detail::parse_decimal(sv);
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// "a/b", or "a" for integers.
inline std::string to_string(const Rational& r) {
  const BigInt& num = boost::multiprecision::numerator(r);
  const BigInt& den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

inline bool is_integer(const Rational& r) { return boost::multiprecision::denominator(r) == 1; }

inline BigInt floor_of(const Rational& r) {
  const BigInt& num = boost::multiprecision::numerator(r);
  const BigInt& den = boost::multiprecision::denominator(r);
  BigInt q = num / den;  // truncates toward zero
  if (num < 0 && q * den != num) q -= 1;
  return q;
}

inline BigInt ceil_of(const Rational& r) { return -floor_of(Rational(-r)); }

}  // namespace wishart
