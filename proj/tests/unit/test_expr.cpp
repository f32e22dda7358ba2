#include <cmath>
#include <random>

#include "doctest.h"
#include "jetplasma/errors.hpp"
#include "jetplasma/expr.hpp"

using namespace jetplasma;
using expr::Expression;

namespace {

double eval(std::string_view s, std::map<std::string, double> b = {}) { return Expression::parse(s).evaluate(b); }

// Random expression text built from the grammar, used for round-trip and
// bit-identity properties.
std::string random_expr(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 11);
  const char* vars[] = {"x1", "x2", "x3"};
  const char* numbers[] = {"0.5", "2", "3.25", "1e-3", "7", "0.1"};
  switch (pick(rng)) {
    case 0: return vars[rng() % 3];
    case 1: return numbers[rng() % 6];
    case 2: return "(" + std::string(vars[rng() % 3]) + ")";
    case 3: return random_expr(rng, depth - 1) + " + " + random_expr(rng, depth - 1);
    case 4: return random_expr(rng, depth - 1) + "-" + random_expr(rng, depth - 1);
    case 5: return random_expr(rng, depth - 1) + "*" + random_expr(rng, depth - 1);
    case 6: return "(" + random_expr(rng, depth - 1) + ")/(2 + " + random_expr(rng, depth - 1) + "^2)";
    case 7: return "-" + random_expr(rng, depth - 1);
    case 8: return "(" + random_expr(rng, depth - 1) + ")^" + std::to_string(rng() % 4);
    case 9: return "sin(" + random_expr(rng, depth - 1) + ")";
    case 10: return "exp(0.1*" + random_expr(rng, depth - 1) + ")";
    default: return "tanh(" + random_expr(rng, depth - 1) + ") - cos(" + random_expr(rng, depth - 1) + ")";
  }
}

}  // namespace

TEST_CASE("precedence and associativity") {
  CHECK(eval("1+2*3") == 7.0);
  CHECK(eval("2^3^2") == 512.0);
  CHECK(eval("-2^2") == -4.0);
  CHECK(eval("(-2)^2") == 4.0);
  CHECK(eval("2*-3") == -6.0);
  CHECK(eval("8/2/2") == 2.0);
  CHECK(eval("2^-1") == 0.5);
  CHECK(eval("1 - 2 - 3") == -4.0);
  CHECK(eval("pow(2, 10)") == 1024.0);
  CHECK(eval("1.5e2 + .5") == 150.5);
}

TEST_CASE("pythagorean identity") {
  CHECK(std::abs(eval("sin(x1)^2 + cos(x1)^2", {{"x1", 0.7}}) - 1.0) < 1e-15);
}

TEST_CASE("syntax errors report offset and expected tokens") {
  try {
    Expression::parse("1 + * 2");
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
    CHECK(e.expected().find("number") != std::string::npos);
  }
  CHECK_THROWS_AS(Expression::parse("foo(1)"), ParseError);
  CHECK_THROWS_AS(Expression::parse("sin(1, 2)"), ParseError);
  CHECK_THROWS_AS(Expression::parse("(1 + 2"), ParseError);
  CHECK_THROWS_AS(Expression::parse("1e999"), ParseError);
  CHECK_THROWS_AS(Expression::parse("2 $ 3"), ParseError);
  CHECK_THROWS_AS(Expression::parse(""), ParseError);
  CHECK_THROWS_AS(Expression::parse("1 2"), ParseError);
}

TEST_CASE("unbound variables and domain errors") {
  CHECK_THROWS_AS(eval("x1 + x2", {{"x1", 1.0}}), UnboundVariableError);
  try {
    eval("1 + log(x1 - 1)", {{"x1", 1.0}});
    FAIL("expected domain error");
  } catch (const DomainError& e) {
    CHECK(e.subexpression() == "log(x1 - 1)");
  }
  CHECK_THROWS_AS(eval("1/(x1-x1)", {{"x1", 2.0}}), DomainError);
  CHECK_THROWS_AS(eval("sqrt(-1)"), DomainError);
  CHECK_THROWS_AS(eval("(-2)^0.5"), DomainError);
}

TEST_CASE("dual evaluation") {
  const std::vector<std::string> seeds{"x1"};
  auto r = Expression::parse("x1*x2").evaluate({{"x1", 2.0}, {"x2", 3.0}}, seeds, 1);
  CHECK(r.value() == 6.0);
  CHECK(r.d(0) == 3.0);
  auto e = Expression::parse("exp(x1)").evaluate({{"x1", 0.0}}, seeds, 2);
  CHECK(e.value() == 1.0);
  CHECK(e.d(0) == doctest::Approx(1.0));
  CHECK(e.d(0, 0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(Expression::parse("x1").evaluate({{"x1", 0.0}}, seeds, 4), EvalError);
}

TEST_CASE("random degree-4 polynomials: dual derivatives vs central differences") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  const std::vector<std::string> names{"x1", "x2", "x3"};
  for (int trial = 0; trial < 20; ++trial) {
    std::string src = "0";
    for (int term = 0; term < 8; ++term) {
      src += " + " + std::to_string(coef(rng));
      int remaining = 4;
      for (int v = 0; v < 3 && remaining > 0; ++v) {
        const int pw = static_cast<int>(rng() % static_cast<unsigned>(remaining + 1));
        remaining -= pw;
        if (pw > 0) src += "*" + names[static_cast<std::size_t>(v)] + "^" + std::to_string(pw);
      }
    }
    auto e = Expression::parse(src);
    std::map<std::string, double> b{{"x1", coef(rng) / 2}, {"x2", coef(rng) / 2}, {"x3", coef(rng) / 2}};
    auto d = e.evaluate(b, names, 1);
    for (int i = 0; i < 3; ++i) {
      const double h = 1e-5;
      auto bp = b, bm = b;
      bp[names[static_cast<std::size_t>(i)]] += h;
      bm[names[static_cast<std::size_t>(i)]] -= h;
      const double fd = (e.evaluate(bp) - e.evaluate(bm)) / (2 * h);
      CHECK(std::abs(d.d(i) - fd) <= 1e-7 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("plain value equals dual value bit-for-bit") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::vector<std::string> names{"x1", "x2", "x3"};
  int evaluated = 0;
  for (int trial = 0; trial < 400; ++trial) {
    auto e = Expression::parse(random_expr(rng, 4));
    std::map<std::string, double> b{{"x1", u(rng)}, {"x2", u(rng)}, {"x3", u(rng)}};
    double plain = 0.0;
    try {
      plain = e.evaluate(b);
    } catch (const DomainError&) {
      continue;
    }
    for (int order = 0; order <= 3; ++order) {
      auto d = e.evaluate(b, names, order);
      CHECK(d.value() == plain);
    }
    ++evaluated;
  }
  CHECK(evaluated > 300);
}

TEST_CASE("pretty-print round trip") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const auto src = random_expr(rng, 5);
    auto a = Expression::parse(src);
    auto printed = a.to_string();
    auto b = Expression::parse(printed);
    CHECK_MESSAGE(a == b, src << " -> " << printed);
    CHECK(b.to_string() == printed);
  }
  // a few shapes the printer must parenthesize
  for (const char* s : {"(-2)^2", "-(2^2)", "(2^3)^2", "a-(b-c)", "a/(b*c)", "-(a+b)", "(a*b)^c", "--a", "a^-b^c",
                        "2^(-x1)", "1e-05*x", "1.5e+300"}) {
    auto a = Expression::parse(s);
    CHECK_MESSAGE(Expression::parse(a.to_string()) == a, s << " -> " << a.to_string());
  }
}

TEST_CASE("derivative linearity") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::vector<std::string> names{"x1", "x2", "x3"};
  for (int trial = 0; trial < 100; ++trial) {
    const auto fs = random_expr(rng, 3), gs = random_expr(rng, 3);
    const double a = 1.75, c = -0.5;
    auto comb = Expression::parse("1.75*(" + fs + ") + -0.5*(" + gs + ")");
    std::map<std::string, double> b{{"x1", u(rng)}, {"x2", u(rng)}, {"x3", u(rng)}};
    try {
      auto df = Expression::parse(fs).evaluate(b, names, 1);
      auto dg = Expression::parse(gs).evaluate(b, names, 1);
      auto dc = comb.evaluate(b, names, 1);
      for (int i = 0; i < 3; ++i) {
        const double expect = a * df.d(i) + c * dg.d(i);
        CHECK(std::abs(dc.d(i) - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
      }
    } catch (const DomainError&) {
    }
  }
}

TEST_CASE("rename and variables") {
  auto e = Expression::parse("y1*x1 + sin(y2)");
  CHECK(e.variables() == std::vector<std::string>{"x1", "y1", "y2"});
  auto r = e.renamed({{"y1", "x1_1"}, {"y2", "x2_1"}});
  CHECK(r.to_string() == "x1_1*x1 + sin(x2_1)");
  CHECK(r.references("x2_1"));
  CHECK_FALSE(r.references("y2"));
}
