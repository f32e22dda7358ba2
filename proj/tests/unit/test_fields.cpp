#include <random>

#include "doctest.h"
#include "jetplasma/errors.hpp"
#include "jetplasma/fields.hpp"

using namespace jetplasma;

TEST_CASE("coordinate namespaces") {
  CHECK(riemann_coordinates(2) == std::vector<std::string>{"x1", "x2"});
  CHECK(lagrange_coordinates(2) == std::vector<std::string>{"x1", "x2", "y1", "y2"});
  const auto m = multitime_coordinates(2, 2);
  CHECK(m == std::vector<std::string>{"t1", "t2", "x1", "x2", "x1_1", "x1_2", "x2_1", "x2_2"});
  CHECK(m[static_cast<std::size_t>(jet_fiber_index(2, 2, 1, 0))] == "x2_1");
}

TEST_CASE("constant field has vanishing partials") {
  auto f = ScalarField::constant(3.5);
  const std::vector<double> pt{0.1, 0.2, 0.3};
  const std::vector<int> seeds{0, 1, 2};
  for (int order = 1; order <= 3; ++order) {
    auto j = field_jet(f, pt, seeds, order);
    CHECK(j.value == 3.5);
    for (double d : j.first) CHECK(d == 0.0);
  }
}

TEST_CASE("x1*x2 jet") {
  auto f = ScalarField::expression("x1*x2", riemann_coordinates(2));
  const std::vector<double> pt{2.0, 3.0};
  const std::vector<int> seeds{0, 1};
  auto j1 = field_jet(f, pt, seeds, 1);
  CHECK(j1.first == std::vector<double>{3.0, 2.0});
  auto j2 = field_jet(f, pt, seeds, 2);
  CHECK(j2.second[0][1] == 1.0);
  CHECK(j2.second[0][0] == 0.0);
}

TEST_CASE("random polynomial fields: partials vs central differences and mixed symmetry") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto names = lagrange_coordinates(2);
  for (int trial = 0; trial < 10; ++trial) {
    std::string src = std::to_string(u(rng));
    for (int t = 0; t < 6; ++t) {
      src += " + " + std::to_string(u(rng)) + "*" + names[rng() % 4] + "^" + std::to_string(1 + rng() % 3) + "*" +
             names[rng() % 4];
    }
    auto f = ScalarField::expression(src, names);
    std::vector<double> pt{u(rng), u(rng), u(rng), u(rng)};
    const std::vector<int> seeds{0, 1, 2, 3};
    auto j = field_jet(f, pt, seeds, 3);
    for (int a = 0; a < 4; ++a) {
      auto p = pt, m = pt;
      p[static_cast<std::size_t>(a)] += 1e-5;
      m[static_cast<std::size_t>(a)] -= 1e-5;
      const double fd = (f.value(p) - f.value(m)) / 2e-5;
      CHECK(std::abs(j.first[static_cast<std::size_t>(a)] - fd) <= 1e-7 * std::max(1.0, std::abs(fd)));
      for (int b = 0; b < 4; ++b) {
        CHECK(std::abs(j.second[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] -
                       j.second[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)]) < 1e-12);
      }
    }
  }
}

TEST_CASE("symmetric and antisymmetric storage") {
  const auto names = riemann_coordinates(2);
  auto g = MetricField::from_upper(2, kLatinDown,
                                   {ScalarField::expression("1 + x1^2", names), ScalarField::expression("x2", names),
                                    ScalarField::constant(2.0)});
  auto gv = g.g.value(std::vector<double>{1.0, 0.5});
  CHECK(gv(0, 1) == gv(1, 0));
  CHECK(gv(0, 0) == 2.0);
  auto h = TensorField::antisymmetric(3, kLatinDown,
                                      {ScalarField::constant(1.0), ScalarField::constant(2.0), ScalarField::constant(3.0)});
  auto hv = h.value(std::vector<double>{0.0, 0.0, 0.0});
  CHECK(hv(1, 0) == -1.0);
  CHECK(hv(2, 1) == -3.0);
  CHECK(hv(1, 1) == 0.0);
  CHECK_THROWS_AS(TensorField::antisymmetric(3, kLatinDown, {ScalarField::constant(1.0)}), ShapeError);
}

TEST_CASE("domain errors carry the point") {
  auto f = ScalarField::expression("log(x1)", riemann_coordinates(1));
  try {
    f.value(std::vector<double>{-1.0});
    FAIL("expected error");
  } catch (const DomainError& e) {
    CHECK(e.location() == "(-1)");
  }
  CHECK_THROWS_AS(ScalarField::expression("y1", riemann_coordinates(1)), UnboundVariableError);
}
