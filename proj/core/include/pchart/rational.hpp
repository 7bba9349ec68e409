#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace pchart {

// Exact rational with 64-bit numerator and denominator, always normalized
// (gcd 1, positive denominator). Arithmetic throws std::overflow_error when
// a result does not fit.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num);  // NOLINT(google-explicit-constructor)
  Rational(std::int64_t num, std::int64_t den);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }

  bool is_zero() const noexcept { return num_ == 0; }
  bool is_integer() const noexcept { return den_ == 1; }
  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

  // "3", "1/2", "0.25". Throws std::invalid_argument on malformed text.
  static Rational parse(std::string_view text);

  // Canonical text: "3" or "1/2".
  std::string to_string() const;
  // Finite decimal when the denominator has only factors 2 and 5, otherwise "n/d".
  std::string to_decimal_or_fraction() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }

  friend bool operator==(const Rational& a, const Rational& b) noexcept {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace pchart
