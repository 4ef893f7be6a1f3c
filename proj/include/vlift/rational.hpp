#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace vlift {

/// Exact rational number. All constants inside symbolic terms use this type.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Parses an integer or decimal literal ("3", "-0.01", "1.4426950216293335",
/// "2e-3") into its exact rational value.
std::optional<Rational> parse_decimal(std::string_view text);

/// Exact rational from a finite double (every double is a dyadic rational).
Rational rational_from_double(double v);

double to_double(const Rational& q);

/// "n" or "n/d".
std::string to_fraction_string(const Rational& q);

/// Human rendering: terminating decimals print as decimals (1/100 -> "0.01"),
/// everything else as "n/d".
std::string to_display_string(const Rational& q);

/// SMT-LIB2 real literal, exact: 3 -> "3.0", -1/2 -> "(- (/ 1.0 2.0))".
std::string to_smt_real(const Rational& q);

bool is_integer(const Rational& q);

/// A scalar that stays exact while only rational operations are applied and
/// degrades to a double once a transcendental function is evaluated.
class Number {
 public:
  Number() : v_(Rational(0)) {}
  Number(Rational q) : v_(std::move(q)) {}  // NOLINT(implicit)
  explicit Number(double d) : v_(d) {}

  bool exact() const { return std::holds_alternative<Rational>(v_); }
  const Rational& rational() const { return std::get<Rational>(v_); }
  double to_double() const;

  friend Number operator+(const Number& a, const Number& b);
  friend Number operator-(const Number& a, const Number& b);
  friend Number operator*(const Number& a, const Number& b);
  /// Throws DomainError on division by zero.
  friend Number operator/(const Number& a, const Number& b);
  Number operator-() const;

  /// Exact when both sides are exact; otherwise compares as doubles.
  friend bool operator==(const Number& a, const Number& b);
  friend bool operator<(const Number& a, const Number& b);
  friend bool operator>(const Number& a, const Number& b) { return b < a; }

  std::string to_string() const;

 private:
  std::variant<Rational, double> v_;
};

}  // namespace vlift
