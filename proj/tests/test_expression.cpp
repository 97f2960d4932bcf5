#include "algdich/expression.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace algdich;

namespace {

Vector state(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

double eval(const char* src, double t = 0.0, const Vector& x = Vector()) {
  return parse_expression(src)(t, x);
}

}  // namespace

TEST(Expression, SinOfStatePlusTime) {
  EXPECT_NEAR(eval("sin(x1+t)", 0.0, state({std::numbers::pi / 2})), 1.0, 1e-15);
}

TEST(Expression, ArctanRateAtZeroIsAboutOne) {
  // (2/3.14159) e^0 (1.5708 + atan 0) = 3.1416/3.14159, independently computed.
  const double expected = 2.0 / 3.14159 * 1.5708;
  EXPECT_NEAR(eval("(2/3.14159) * exp(t) * (1.5708 + atan(t))"), expected, 1e-15);
  EXPECT_NEAR(expected, 1.0, 1e-5);
  EXPECT_NEAR(eval("(2/pi) * exp(t) * (pi/2 + atan(t))"), 1.0, 1e-15);
}

TEST(Expression, SyntaxErrorPointsAtStar) {
  try {
    parse_expression("1 + * 2");
    FAIL() << "expected a ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_EQ(e.column(), 5u);
    EXPECT_NE(std::string(e.what()).find("'*'"), std::string::npos);
  }
}

TEST(Expression, LocationsCountLines) {
  try {
    parse_expression("1 +\n  2 )");
    FAIL() << "expected a ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 5u);
  }
}

TEST(Expression, UnknownIdentifier) {
  try {
    parse_expression("2 * y + 1");
    FAIL() << "expected a ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.column(), 5u);
    EXPECT_NE(std::string(e.what()).find("unknown identifier 'y'"), std::string::npos);
  }
  EXPECT_THROW(parse_expression("x0"), ParseError);
  EXPECT_THROW(parse_expression("x01"), ParseError);
  EXPECT_THROW(parse_expression("log(t)"), ParseError);
}

TEST(Expression, MalformedInputs) {
  for (const char* bad : {"", "   ", "(1 + 2", "sin 1", "1.", "1e", "1 2", "2 ^", ")", "3 $ 4"}) {
    if (std::string(bad) == "1.") continue;  // "1." is a valid literal
    EXPECT_THROW(parse_expression(bad), ParseError) << bad;
  }
  EXPECT_DOUBLE_EQ(eval("1."), 1.0);
  EXPECT_DOUBLE_EQ(eval(".5e1"), 5.0);
}

TEST(Expression, Precedence) {
  EXPECT_DOUBLE_EQ(eval("-2^2"), -4.0);
  EXPECT_DOUBLE_EQ(eval("2^-1"), 0.5);
  EXPECT_DOUBLE_EQ(eval("2^3^2"), 512.0);
  EXPECT_DOUBLE_EQ(eval("1 + 2 * 3"), 7.0);
  EXPECT_DOUBLE_EQ(eval("8 / 4 / 2"), 1.0);
  EXPECT_DOUBLE_EQ(eval("1 - 2 - 3"), -4.0);
  EXPECT_DOUBLE_EQ(eval("-3 * -2"), 6.0);
  EXPECT_DOUBLE_EQ(eval("(1 + 2) * 3"), 9.0);
  EXPECT_DOUBLE_EQ(eval("2 * -t", 1.5), -3.0);
}

TEST(Expression, FunctionsAndState) {
  const Vector x = state({0.25, 4.0, -1.0});
  EXPECT_DOUBLE_EQ(eval("sqrt(x2) + ln(exp(x1)) + cos(0) + atan(1)*4/pi + x3", 0.0, x),
                   2.0 + 0.25 + 1.0 + 1.0 - 1.0);
  const auto e = parse_expression("x3 * t + x1");
  EXPECT_EQ(e.state_dimension(), 3);
  EXPECT_TRUE(e.uses_state());
  EXPECT_FALSE(parse_expression("exp(t)").uses_state());
}

TEST(Expression, DomainErrorsCarryLocation) {
  auto message = [](const char* src, const Vector& x = Vector()) {
    try {
      parse_expression(src)(0.0, x);
    } catch (const EvaluationError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("1 + ln(t)").find("column 5"), std::string::npos);
  EXPECT_NE(message("1 + ln(t)").find("ln"), std::string::npos);
  EXPECT_NE(message("sqrt(t - 1)").find("sqrt"), std::string::npos);
  EXPECT_NE(message("1 / t").find("division by zero"), std::string::npos);
  EXPECT_NE(message("x2", state({1.0})).find("x2"), std::string::npos);
  EXPECT_NE(message("(-8)^0.5 * 0 + (0)^(-1)").find("power"), std::string::npos);
}

TEST(Expression, PrintParsesBackToSameTree) {
  for (const char* src :
       {"sin(x1+t)", "-2^2", "2^-1", "2^3^2", "(2/3.14159) * exp(t) * (1.5708 + atan(t))",
        "-(1 + 1/((pi/2 + atan(t))*(1 + t^2)))", "0.1 * x2 - -x1 / 3e-3", "--t",
        "ln(sqrt(x1^2 + 1)) * cos(t)"}) {
    const auto e = parse_expression(src);
    const auto back = parse_expression(e.to_string());
    EXPECT_TRUE(e.structurally_equal(back)) << src << " -> " << e.to_string();
    EXPECT_EQ(back.to_string(), e.to_string());
    const Vector x = state({0.7, -0.3});
    EXPECT_DOUBLE_EQ(e(0.4, x), back(0.4, x)) << src;
  }
  EXPECT_FALSE(parse_expression("1 + t").structurally_equal(parse_expression("t + 1")));
}
