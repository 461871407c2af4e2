#include "anomalykit/error.hpp"
#include "anomalykit/expression.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>

using namespace anomalykit;

TEST_CASE("arithmetic follows the usual precedence") {
  const Expression e = Expression::parse("1 + 2*x1 - x2/4 + 2^3^2 - -x1");
  for (double x : {0.0, 0.3, -1.2}) {
    for (double y : {0.0, 2.0}) CHECK(e(x, y) == doctest::Approx(1 + 2 * x - y / 4 + std::pow(2.0, 9.0) + x));
  }
  CHECK(Expression::parse("(1+x1)*(1-x1)")(0.5, 0.0) == doctest::Approx(0.75));
  CHECK(Expression::parse("-x1^2")(3.0, 0.0) == doctest::Approx(-9.0));
}

TEST_CASE("functions and pi") {
  const Expression e = Expression::parse("0.5 + 0.25*cos(pi*x1)*cos(pi*x2)");
  const double pi = std::numbers::pi;
  CHECK(e(0.3, 0.7) == doctest::Approx(0.5 + 0.25 * std::cos(pi * 0.3) * std::cos(pi * 0.7)));
  CHECK(Expression::parse("exp(sin(x2))")(0.0, 1.1) == doctest::Approx(std::exp(std::sin(1.1))));
}

TEST_CASE("constants are detected and folded") {
  const Expression e = Expression::parse("2*pi - 1");
  CHECK(e.is_constant());
  CHECK(e.constant_value() == doctest::Approx(2 * std::numbers::pi - 1));
  CHECK_FALSE(Expression::parse("x1*0").is_constant());
  CHECK(Expression::constant(0.25)(5.0, 5.0) == 0.25);
}

TEST_CASE("malformed input is a config error") {
  for (const char* bad : {"", "1+", "(x1", "x3", "sin x1", "2 ** 3", "1 2", "tan(x1)"})
    CHECK_THROWS_AS(Expression::parse(bad), ConfigError);
}

TEST_CASE("very deep expressions are rejected when parsed") {
  std::string deep = "1";
  for (int k = 0; k < 70; ++k) deep = "1+(" + deep + ")";
  // right-nested sums keep every left operand on the stack
  CHECK_THROWS_AS(Expression::parse(deep), ConfigError);
  std::string ok = "1";
  for (int k = 0; k < 200; ++k) ok = "(" + ok + ")+1";
  CHECK(Expression::parse(ok)(0, 0) == doctest::Approx(201.0));
}
