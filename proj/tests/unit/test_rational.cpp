#include <random>
#include <stdexcept>

#include <doctest.h>

#include "pchart/rational.hpp"

using pchart::Rational;

TEST_CASE("rationals normalize") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(3, -6) == Rational(-1, 2));
  CHECK(Rational(0, 5) == Rational(0));
  CHECK(Rational(-4, -8).den() == 2);
  CHECK_THROWS(Rational(1, 0));
}

TEST_CASE("rational parsing and printing") {
  CHECK(Rational::parse("1/2") == Rational(1, 2));
  CHECK(Rational::parse("0.25") == Rational(1, 4));
  CHECK(Rational::parse("3") == Rational(3));
  CHECK(Rational::parse("-1.5") == Rational(-3, 2));
  CHECK_THROWS_AS(Rational::parse("1/"), std::invalid_argument);
  CHECK_THROWS_AS(Rational::parse("abc"), std::invalid_argument);
  CHECK(Rational(1, 2).to_string() == "1/2");
  CHECK(Rational(6).to_string() == "6");
  CHECK(Rational(1, 2).to_decimal_or_fraction() == "0.5");
  CHECK(Rational(3, 8).to_decimal_or_fraction() == "0.375");
  CHECK(Rational(1, 3).to_decimal_or_fraction() == "1/3");
}

TEST_CASE("rational arithmetic is exact") {
  CHECK(Rational(1, 2) + Rational(1, 3) == Rational(5, 6));
  CHECK(Rational(1, 2) - Rational(1, 3) == Rational(1, 6));
  CHECK(Rational(2, 3) * Rational(3, 4) == Rational(1, 2));
  CHECK(Rational(1, 2) / Rational(1, 4) == Rational(2));
  CHECK(Rational(1, 10) + Rational(2, 10) == Rational(3, 10));
  CHECK(Rational(1, 3) < Rational(1, 2));
  CHECK_THROWS(Rational(1) / Rational(0));
}

TEST_CASE("rational overflow is reported") {
  Rational big(INT64_MAX / 2 + 1);
  CHECK_THROWS_AS(big + big, std::overflow_error);
}

TEST_CASE("property: field laws on random small rationals") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> num(-50, 50), den(1, 30);
  for (int i = 0; i < 500; ++i) {
    Rational a(num(rng), den(rng)), b(num(rng), den(rng)), c(num(rng), den(rng));
    CHECK(a + b == b + a);
    CHECK((a + b) + c == a + (b + c));
    CHECK(a * (b + c) == a * b + a * c);
    CHECK(Rational::parse(a.to_string()) == a);
    if (!b.is_zero()) CHECK((a / b) * b == a);
  }
}
