#include "vlift/rational.hpp"

#include "vlift/error.hpp"

#include <cctype>
#include <cmath>

namespace vlift {

std::optional<Rational> parse_decimal(std::string_view text) {
  size_t pos = 0;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) {
    negative = text[pos] == '-';
    ++pos;
  }
  BigInt mantissa = 0;
  long long scale = 0;
  bool digits = false;
  bool seen_dot = false;
  for (; pos < text.size(); ++pos) {
    char c = text[pos];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      mantissa = mantissa * 10 + (c - '0');
      if (seen_dot) ++scale;
      digits = true;
    } else if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else {
      break;
    }
  }
  if (!digits) return std::nullopt;
  long long exponent = 0;
  if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
    ++pos;
    bool exp_negative = false;
    if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) {
      exp_negative = text[pos] == '-';
      ++pos;
    }
    bool exp_digits = false;
    for (; pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])); ++pos) {
      exponent = exponent * 10 + (text[pos] - '0');
      exp_digits = true;
      if (exponent > 4000) return std::nullopt;
    }
    if (!exp_digits) return std::nullopt;
    if (exp_negative) exponent = -exponent;
  }
  if (pos != text.size()) return std::nullopt;
  long long net = exponent - scale;
  BigInt power = 1;
  for (long long i = 0; i < (net < 0 ? -net : net); ++i) power *= 10;
  Rational q = net >= 0 ? Rational(mantissa * power) : Rational(mantissa, power);
  return negative ? Rational(-q) : q;
}

Rational rational_from_double(double v) {
  if (!std::isfinite(v)) throw DomainError("non-finite value cannot be made exact");
  int exp = 0;
  double frac = std::frexp(v, &exp);
  // frac * 2^53 is an exact integer
  auto mant = static_cast<long long>(std::ldexp(frac, 53));
  exp -= 53;
  BigInt num = mant;
  BigInt den = 1;
  if (exp > 0) {
    num <<= exp;
  } else {
    den <<= -exp;
  }
  return Rational(num, den);
}

double to_double(const Rational& q) { return q.convert_to<double>(); }

std::string to_fraction_string(const Rational& q) {
  auto num = boost::multiprecision::numerator(q);
  auto den = boost::multiprecision::denominator(q);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

std::string to_display_string(const Rational& q) {
  auto num = boost::multiprecision::numerator(q);
  auto den = boost::multiprecision::denominator(q);
  if (den == 1) return num.str();
  BigInt rest = den;
  int twos = 0, fives = 0;
  while (rest % 2 == 0) { rest /= 2; ++twos; }
  while (rest % 5 == 0) { rest /= 5; ++fives; }
  if (rest != 1) return to_fraction_string(q);
  int digits = std::max(twos, fives);
  BigInt scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  BigInt scaled = num * (scale / den);
  bool negative = scaled < 0;
  if (negative) scaled = -scaled;
  std::string s = scaled.str();
  if (static_cast<int>(s.size()) <= digits) s.insert(0, digits - s.size() + 1, '0');
  s.insert(s.size() - digits, ".");
  return (negative ? "-" : "") + s;
}

std::string to_smt_real(const Rational& q) {
  auto num = boost::multiprecision::numerator(q);
  auto den = boost::multiprecision::denominator(q);
  bool negative = num < 0;
  if (negative) num = -num;
  std::string body = den == 1 ? num.str() + ".0" : "(/ " + num.str() + ".0 " + den.str() + ".0)";
  return negative ? "(- " + body + ")" : body;
}

bool is_integer(const Rational& q) { return boost::multiprecision::denominator(q) == 1; }

double Number::to_double() const {
  if (exact()) return vlift::to_double(rational());
  return std::get<double>(v_);
}

Number operator+(const Number& a, const Number& b) {
  if (a.exact() && b.exact()) return Number(Rational(a.rational() + b.rational()));
  return Number(a.to_double() + b.to_double());
}

Number operator-(const Number& a, const Number& b) {
  if (a.exact() && b.exact()) return Number(Rational(a.rational() - b.rational()));
  return Number(a.to_double() - b.to_double());
}

Number operator*(const Number& a, const Number& b) {
  if (a.exact() && b.exact()) return Number(Rational(a.rational() * b.rational()));
  return Number(a.to_double() * b.to_double());
}

Number operator/(const Number& a, const Number& b) {
  if (b.exact() ? b.rational() == 0 : b.to_double() == 0.0) throw DomainError("division by zero");
  if (a.exact() && b.exact()) return Number(Rational(a.rational() / b.rational()));
  return Number(a.to_double() / b.to_double());
}

Number Number::operator-() const {
  if (exact()) return Number(Rational(-rational()));
  return Number(-to_double());
}

bool operator==(const Number& a, const Number& b) {
  if (a.exact() && b.exact()) return a.rational() == b.rational();
  return a.to_double() == b.to_double();
}

bool operator<(const Number& a, const Number& b) {
  if (a.exact() && b.exact()) return a.rational() < b.rational();
  return a.to_double() < b.to_double();
}

std::string Number::to_string() const {
  if (exact()) return to_display_string(rational());
  return std::to_string(std::get<double>(v_));
}

}  // namespace vlift
