#include <cmath>
#include <random>

#include "doctest.h"
#include "jetplasma/covariant.hpp"
#include "jetplasma/errors.hpp"
#include "jetplasma/riemann.hpp"

using namespace jetplasma;
using namespace jetplasma::riemann;

namespace {

ScalarField sf(const std::string& s, int n) { return ScalarField::expression(s, riemann_coordinates(n)); }

Space space_from(int n, const std::vector<std::string>& upper) {
  std::vector<ScalarField> f;
  for (const auto& s : upper) f.push_back(sf(s, n));
  return {n, MetricField::from_upper(n, kLatinDown, f)};
}

TensorField vector_field(int n, const std::vector<std::string>& c) {
  std::vector<ScalarField> f;
  for (const auto& s : c) f.push_back(sf(s, n));
  return TensorField::components({n}, {kLatinUp}, f);
}

TensorField two_form(int n, const std::vector<std::string>& strict_upper) {
  std::vector<ScalarField> f;
  for (const auto& s : strict_upper) f.push_back(sf(s, n));
  return TensorField::antisymmetric(n, kLatinDown, f);
}

// 3x3 inverse by cofactors.
std::vector<double> inverse3(const RealTensor& m) {
  auto a = [&](int i, int j) { return m(i, j); };
  const double det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
                     a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                     a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  std::vector<double> inv(9);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      inv[static_cast<std::size_t>(3 * i + j)] = (a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0)) / det;
    }
  }
  return inv;
}

// Curved 3d test scenario with nonconstant everything.
struct Scene {
  Space space = space_from(3, {"2 + sin(x1)*x2", "0.3*x3", "0.1*x1*x2", "3 + x1^2", "0.2*cos(x3)", "4 + x2*x3"});
  ElectromagneticPair em{two_form(3, {"x1*x2", "sin(x3)", "0.5 + x2^2"}), two_form(3, {"cos(x1)", "x3", "x1 - x2"})};
  FluidState state{sf("1 + 0.1*x1*x2 + x3^2", 3), sf("2 + 0.3*sin(x2)", 3), 1.5,
                   vector_field(3, {"1 + x2", "0.3*x1*x3", "0.5 - 0.2*x1"})};
};

std::vector<double> random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  return {d(rng), d(rng), d(rng)};
}

double rel_err(const RealTensor& a, const RealTensor& b) {
  return max_abs_diff(a, b) / std::max(1.0, max_abs(b));
}

}  // namespace

TEST_CASE("polar christoffel symbols") {
  const Space polar = space_from(2, {"1", "0", "x1^2"});
  const std::vector<double> x{1.7, 0.4};
  const auto g = christoffel(polar, x);
  CHECK(g(0, 1, 1) == doctest::Approx(-1.7).epsilon(1e-14));
  CHECK(g(1, 0, 1) == doctest::Approx(1 / 1.7).epsilon(1e-14));
  CHECK(g(1, 1, 0) == doctest::Approx(1 / 1.7).epsilon(1e-14));
  CHECK(g(0, 0, 0) == 0.0);
  CHECK(g(0, 0, 1) == 0.0);
  CHECK(g(1, 1, 1) == 0.0);
  CHECK(g(1, 0, 0) == 0.0);
}

TEST_CASE("conformal christoffel symbols match the closed form") {
  const int n = 3;
  const std::string e = "exp(2*(0.3*x1 + sin(x2)*x3))";
  const Space conf = space_from(n, {e, "0", "0", e, "0", e});
  const std::vector<double> x{0.2, -0.7, 1.1};
  // sigma_k
  const double s[3] = {0.3, std::cos(x[1]) * x[2], std::sin(x[1])};
  const auto g = christoffel(conf, x);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const double expect = (i == j ? s[k] : 0.0) + (i == k ? s[j] : 0.0) - (j == k ? s[i] : 0.0);
        CHECK(g(i, j, k) == doctest::Approx(expect).epsilon(1e-12).scale(1));
      }
    }
  }
}

TEST_CASE("christoffel symbols against finite differences of the metric") {
  Scene sc;
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_point(rng);
    const double h = 1e-5;
    std::vector<RealTensor> dg;
    for (int k = 0; k < 3; ++k) {
      auto xp = x, xm = x;
      xp[static_cast<std::size_t>(k)] += h;
      xm[static_cast<std::size_t>(k)] -= h;
      dg.push_back(axpy(sc.space.phi.g.value(xp), -1.0, sc.space.phi.g.value(xm)));
    }
    const auto inv = inverse3(sc.space.phi.g.value(x));
    const auto g = christoffel(sc.space, x);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
          double acc = 0.0;
          for (int m = 0; m < 3; ++m) {
            acc += inv[static_cast<std::size_t>(3 * i + m)] *
                   (dg[static_cast<std::size_t>(k)](j, m) + dg[static_cast<std::size_t>(j)](k, m) -
                    dg[static_cast<std::size_t>(m)](j, k)) /
                   (4 * h);
          }
          CHECK(std::abs(g(i, j, k) - acc) < 1e-7);
        }
      }
    }
  }
}

TEST_CASE("velocity normalization") {
  const Space s = space_from(2, {"1", "0", "3"});
  FluidState st{ScalarField::constant(1), ScalarField::constant(1), 1.0, vector_field(2, {"1", "1"})};
  const std::vector<double> x{0.0, 0.0};
  const auto u = normalize_velocity(st, s, x);
  CHECK(u(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(u(1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("non-positive phi(v,v) reports the point") {
  const Space mink = space_from(2, {"-1", "0", "1"});
  FluidState st{ScalarField::constant(1), ScalarField::constant(1), 1.0, vector_field(2, {"1", "0.5"})};
  const std::vector<double> x{0.25, 0.0};
  try {
    (void)residuals(st, mink, ElectromagneticPair::zero(2), x);
    FAIL("expected NormalizationError");
  } catch (const NormalizationError& e) {
    CHECK(std::string(e.what()).find("0.25") != std::string::npos);
  }
}

TEST_CASE("invariants vanish at random points") {
  Scene sc;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    const auto x = random_point(rng);
    const auto r = residuals(sc.state, sc.space, sc.em, x);
    for (const auto& name : invariant_names()) {
      INFO(name);
      CHECK(r.norm(name) < 1e-10);
    }
  }
}

TEST_CASE("conservation divergence against finite differences of the stress tensor") {
  Scene sc;
  std::mt19937_64 rng(8);
  const double h = 1e-5;
  for (int trial = 0; trial < 6; ++trial) {
    const auto x = random_point(rng);
    const auto T = stress_tensor(sc.state, sc.space, sc.em, x).mixed;
    const auto g = christoffel(sc.space, x);
    RealTensor expect({3}, {kLatinDown});
    for (int m = 0; m < 3; ++m) {
      auto xp = x, xm = x;
      xp[static_cast<std::size_t>(m)] += h;
      xm[static_cast<std::size_t>(m)] -= h;
      const auto tp = stress_tensor(sc.state, sc.space, sc.em, xp).mixed;
      const auto tm = stress_tensor(sc.state, sc.space, sc.em, xm).mixed;
      for (int i = 0; i < 3; ++i) expect(i) += (tp(m, i) - tm(m, i)) / (2 * h);
    }
    for (int i = 0; i < 3; ++i) {
      for (int m = 0; m < 3; ++m) {
        for (int k = 0; k < 3; ++k) expect(i) += g(m, k, m) * T(k, i) - g(k, i, m) * T(m, k);
      }
    }
    const auto r = residuals(sc.state, sc.space, sc.em, x);
    CHECK(rel_err(r.at("conservation_direct"), expect) < 1e-6);
    CHECK(rel_err(r.at("conservation"), expect) < 1e-6);
  }
}

TEST_CASE("Lorentz force against finite differences of the energy tensor") {
  Scene sc;
  const std::vector<double> x{0.1, -0.2, 0.3};
  const double h = 1e-5;
  const auto E = minkowski_energy(sc.space, sc.em, x).mixed;
  const auto g = christoffel(sc.space, x);
  std::vector<double> div(3, 0.0);
  for (int m = 0; m < 3; ++m) {
    auto xp = x, xm = x;
    xp[static_cast<std::size_t>(m)] += h;
    xm[static_cast<std::size_t>(m)] -= h;
    const auto ep = minkowski_energy(sc.space, sc.em, xp).mixed;
    const auto em = minkowski_energy(sc.space, sc.em, xm).mixed;
    for (int i = 0; i < 3; ++i) div[static_cast<std::size_t>(i)] += (ep(m, i) - em(m, i)) / (2 * h);
  }
  for (int i = 0; i < 3; ++i) {
    for (int m = 0; m < 3; ++m) {
      for (int k = 0; k < 3; ++k) div[static_cast<std::size_t>(i)] += g(m, k, m) * E(k, i) - g(k, i, m) * E(m, k);
    }
  }
  const auto inv = inverse3(sc.space.phi.g.value(x));
  const auto F = lorentz_force(sc.space, sc.em, x);
  for (int r = 0; r < 3; ++r) {
    double expect = 0.0;
    for (int s = 0; s < 3; ++s) expect -= inv[static_cast<std::size_t>(3 * r + s)] * div[static_cast<std::size_t>(s)];
    CHECK(F(r) == doctest::Approx(expect).epsilon(1e-6).scale(1));
  }
}

TEST_CASE("flat space with constant pressure and no field: residuals of a uniform flow vanish") {
  const Space flat = space_from(2, {"1", "0", "1"});
  FluidState st{ScalarField::constant(2), ScalarField::constant(1), 1.0, vector_field(2, {"0.6", "0.8"})};
  const std::vector<double> x{0.3, 0.9};
  const auto r = residuals(st, flat, ElectromagneticPair::zero(2), x);
  for (const char* name : {"conservation", "continuity", "euler", "lorentz_condition"}) {
    CHECK(r.norm(name) == 0.0);
  }
}

TEST_CASE("stream line in flat space is a straight line") {
  const Space flat = space_from(2, {"1", "0", "1"});
  FluidState st{ScalarField::constant(1), ScalarField::constant(1), 1.0, {}};
  const std::vector<double> x0{0.0, 1.0}, v0{0.5, -0.25};
  const auto rows = integrate_stream_line(st, flat, ElectromagneticPair::zero(2), x0, v0, 0.1, 20);
  REQUIRE(rows.size() == 21);
  CHECK(rows.back().s == doctest::Approx(2.0));
  CHECK(rows.back().x[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rows.back().x[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("polar geodesic: RK4 is fourth order") {
  const Space polar = space_from(2, {"1", "0", "x1^2"});
  FluidState st{ScalarField::constant(1), ScalarField::constant(1), 1.0, {}};
  // Cartesian line (1, s): r = sqrt(1 + s^2), theta = atan(s).
  const std::vector<double> x0{1.0, 0.0}, v0{0.0, 1.0};
  auto err = [&](int steps) {
    const auto rows = integrate_stream_line(st, polar, ElectromagneticPair::zero(2), x0, v0, 1.0 / steps, steps);
    const auto& last = rows.back();
    return std::max(std::abs(last.x[0] - std::sqrt(2.0)), std::abs(last.x[1] - std::atan(1.0)));
  };
  const double e1 = err(20), e2 = err(40);
  const double ratio = e1 / e2;
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("singular inertial factor is rejected") {
  const Space flat = space_from(2, {"1", "0", "1"});
  FluidState st{ScalarField::constant(-2), ScalarField::constant(2), 1.0, {}};
  const std::vector<double> x{0.0, 0.0}, v{1.0, 0.0};
  CHECK_THROWS_AS(stream_line_rhs(st, flat, ElectromagneticPair::zero(2), x, v), SingularDynamicsError);
  CHECK_THROWS_AS(integrate_stream_line(st, flat, ElectromagneticPair::zero(2), x, v, 0.1, 3), IntegrationError);
}

TEST_CASE("integrator argument checks") {
  const Rhs rhs = [](std::span<const double>, std::span<const double> v) { return std::vector<double>(v.size(), 0.0); };
  const std::vector<double> x{0.0}, v{1.0};
  CHECK_THROWS(integrate(rhs, x, v, 0.0, 3));
  CHECK_THROWS(integrate(rhs, x, v, 0.1, 0));
  const std::vector<double> v2{1.0, 0.0};
  CHECK_THROWS_AS(integrate(rhs, x, v2, 0.1, 3), ShapeError);
}
