#include "pchart/rational.hpp"

#include <charconv>
#include <numeric>
#include <stdexcept>

namespace pchart {
namespace {

using Wide = __int128;

std::int64_t narrow(Wide v) {
  if (v > INT64_MAX || v < INT64_MIN) throw std::overflow_error("rational overflow");
  return static_cast<std::int64_t>(v);
}

Rational make(Wide num, Wide den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  Wide a = num < 0 ? -num : num;
  Wide b = den;
  while (b != 0) {
    Wide t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  return Rational(narrow(num), narrow(den));
}

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw std::invalid_argument("malformed rational: " + std::string(s));
  return v;
}

}  // namespace

Rational::Rational(std::int64_t num) : num_(num), den_(1) {}

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  Wide n = num, d = den;
  if (d < 0) {
    n = -n;
    d = -d;
  }
  std::int64_t g = std::gcd(num, den);
  if (g == 0) g = 1;
  num_ = narrow(n / g);
  den_ = narrow(d / g);
}

Rational Rational::parse(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto n = text.substr(0, slash);
    auto d = text.substr(slash + 1);
    while (!n.empty() && n.back() == ' ') n.remove_suffix(1);
    while (!d.empty() && d.front() == ' ') d.remove_prefix(1);
    std::int64_t den = parse_int(d);
    if (den == 0) throw std::invalid_argument("zero denominator in " + std::string(text));
    return Rational(parse_int(n), den);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    auto whole = text.substr(0, dot);
    auto frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 17) throw std::invalid_argument("malformed rational: " + std::string(text));
    bool neg = !whole.empty() && whole.front() == '-';
    if (neg) whole.remove_prefix(1);
    std::int64_t w = whole.empty() ? 0 : parse_int(whole);
    if (w < 0) throw std::invalid_argument("malformed rational: " + std::string(text));
    std::int64_t f = parse_int(frac);
    if (f < 0) throw std::invalid_argument("malformed rational: " + std::string(text));
    Wide scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    Wide num = static_cast<Wide>(w) * scale + f;
    return make(neg ? -num : num, scale);
  }
  return Rational(parse_int(text));
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

std::string Rational::to_decimal_or_fraction() const {
  if (den_ == 1) return std::to_string(num_);
  std::int64_t d = den_;
  int twos = 0, fives = 0;
  while (d % 2 == 0) {
    d /= 2;
    ++twos;
  }
  while (d % 5 == 0) {
    d /= 5;
    ++fives;
  }
  if (d != 1) return to_string();
  int digits = std::max(twos, fives);
  Wide scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  Wide scaled = static_cast<Wide>(num_) * (scale / den_);
  bool neg = scaled < 0;
  if (neg) scaled = -scaled;
  std::string whole = std::to_string(static_cast<std::int64_t>(scaled / scale));
  std::string frac = std::to_string(static_cast<std::int64_t>(scaled % scale));
  frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  return (neg ? "-" : "") + whole + "." + frac;
}

Rational operator+(const Rational& a, const Rational& b) {
  return make(static_cast<Wide>(a.num_) * b.den_ + static_cast<Wide>(b.num_) * a.den_,
              static_cast<Wide>(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
  return make(static_cast<Wide>(a.num_) * b.den_ - static_cast<Wide>(b.num_) * a.den_,
              static_cast<Wide>(a.den_) * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
  return make(static_cast<Wide>(a.num_) * b.num_, static_cast<Wide>(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) throw std::domain_error("rational division by zero");
  return make(static_cast<Wide>(a.num_) * b.den_, static_cast<Wide>(a.den_) * b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  Wide l = static_cast<Wide>(a.num_) * b.den_;
  Wide r = static_cast<Wide>(b.num_) * a.den_;
  if (l < r) return std::strong_ordering::less;
  if (l > r) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

}  // namespace pchart
