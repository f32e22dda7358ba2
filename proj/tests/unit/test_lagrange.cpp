#include <cmath>
#include <random>

#include "doctest.h"
#include "jetplasma/covariant.hpp"
#include "jetplasma/errors.hpp"
#include "jetplasma/lagrange.hpp"

using namespace jetplasma;
using namespace jetplasma::lagrange;

namespace {

ScalarField lf(const std::string& s, int n) { return ScalarField::expression(s, lagrange_coordinates(n)); }
ScalarField rf(const std::string& s, int n) { return ScalarField::expression(s, riemann_coordinates(n)); }

MetricField metric(int n, const std::vector<std::string>& upper, bool tangent = true) {
  std::vector<ScalarField> f;
  for (const auto& s : upper) f.push_back(tangent ? lf(s, n) : rf(s, n));
  return MetricField::from_upper(n, kLatinDown, f);
}

TensorField two_form(int n, const std::vector<std::string>& strict_upper) {
  std::vector<ScalarField> f;
  for (const auto& s : strict_upper) f.push_back(lf(s, n));
  return TensorField::antisymmetric(n, kLatinDown, f);
}

TensorField mixed_field(int n, const std::vector<std::string>& c) {
  std::vector<ScalarField> f;
  for (const auto& s : c) f.push_back(lf(s, n));
  return TensorField::components({n, n}, {kLatinUp, kLatinDown}, f);
}

// Generic 2d space: y-dependent metric and a user connection.
Space generic_space() {
  return {2, metric(2, {"2 + 0.3*sin(x1)*y1^2", "0.1*x2*y2", "3 + 0.2*x1*y1*y2 + 0.1*y2^2"}),
          mixed_field(2, {"0.2*y1 + x2*y2", "0.1*x1*y1", "-0.3*y2", "0.5*y1*y2"})};
}

FluidState generic_state() {
  return {lf("1 + 0.2*x1*y2 + 0.1*y1^2", 2), lf("2 + 0.1*sin(x2 + y1)", 2), 1.3,
          {two_form(2, {"x1*y2 + 0.5"}), two_form(2, {"cos(x2)*y1"})}};
}

std::vector<double> rnd(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = d(rng);
  return v;
}

double max_diff(const RealTensor& a, const RealTensor& b) { return max_abs_diff(a, b); }

}  // namespace

TEST_CASE("adapted derivative reduces to the partial derivative") {
  const Space s = generic_space();
  const TangentPoint pt{{0.3, -0.2}, {0.7, 0.4}};
  const auto f = lf("sin(x1)*x2^2", 2);
  const auto d = adapted_x_derivative(f, s, pt);
  CHECK(d(0) == doctest::Approx(std::cos(0.3) * 0.04).epsilon(1e-14));
  CHECK(d(1) == doctest::Approx(std::sin(0.3) * 2 * -0.2).epsilon(1e-14));

  Space flat{2, s.g, {}};
  const auto h = lf("x1*y1 + y2^2*x2", 2);
  const auto dh = adapted_x_derivative(h, flat, pt);
  CHECK(dh(0) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(dh(1) == doctest::Approx(0.16).epsilon(1e-14));
}

TEST_CASE("adapted derivative of g(y,y) with the canonical connection matches the chain rule") {
  // g depends on (x, y); N = Gamma(x, y) y with Gamma from x-derivatives of g.
  const std::vector<std::string> up{"2 + x1*x2 + 0.1*y1^2", "0.2*sin(x1)*y2", "1.5 + x2^2*y1"};
  const Space s{2, metric(2, up), canonical_connection(metric(2, up), 2)};
  const auto f = lf("(2 + x1*x2 + 0.1*y1^2)*y1^2 + 2*0.2*sin(x1)*y2*y1*y2 + (1.5 + x2^2*y1)*y2^2", 2);
  const TangentPoint pt{{0.4, 0.9}, {0.6, -0.5}};
  const auto coords = pt.coordinates();
  const double h = 1e-5;
  auto gval = [&](std::vector<double> c) { return s.g.g.value(c); };
  // dg_pq/dx^c and dg_pq/dy^c by central differences.
  std::vector<RealTensor> dgx, dgy;
  for (int c = 0; c < 4; ++c) {
    auto cp = coords, cm = coords;
    cp[static_cast<std::size_t>(c)] += h;
    cm[static_cast<std::size_t>(c)] -= h;
    RealTensor d = axpy(gval(cp), -1.0, gval(cm));
    for (double& v : d.data()) v /= 2 * h;
    (c < 2 ? dgx : dgy).push_back(d);
  }
  const RealTensor g = gval(coords);
  const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
  const double inv[2][2] = {{g(1, 1) / det, -g(0, 1) / det}, {-g(1, 0) / det, g(0, 0) / det}};
  const double* y = pt.y.data();
  double N[2][2] = {};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int m = 0; m < 2; ++m) {
        for (int q = 0; q < 2; ++q) {
          N[i][j] += 0.5 * inv[i][q] * (dgx[static_cast<std::size_t>(m)](j, q) + dgx[static_cast<std::size_t>(j)](m, q) -
                                        dgx[static_cast<std::size_t>(q)](j, m)) * y[m];
        }
      }
    }
  }
  const auto d = adapted_x_derivative(f, s, pt);
  for (int i = 0; i < 2; ++i) {
    // d/dx^i of g_pq y^p y^q minus N^m_i d/dy^m of the same.
    double expect = 0.0;
    for (int p = 0; p < 2; ++p) {
      for (int q = 0; q < 2; ++q) expect += dgx[static_cast<std::size_t>(i)](p, q) * y[p] * y[q];
    }
    for (int m = 0; m < 2; ++m) {
      double dym = 0.0;
      for (int p = 0; p < 2; ++p) {
        for (int q = 0; q < 2; ++q) dym += dgy[static_cast<std::size_t>(m)](p, q) * y[p] * y[q];
        dym += 2 * g(m, p) * y[p];
      }
      expect -= N[m][i] * dym;
    }
    CHECK(d(i) == doctest::Approx(expect).epsilon(1e-8).scale(1));
  }
}

TEST_CASE("Cartan connection of a Riemannian metric with canonical N") {
  const std::vector<std::string> up{"1 + x1^2", "0.3*x2", "2 + sin(x1*x2)"};
  const MetricField gx = metric(2, up);
  const Space s{2, gx, canonical_connection(gx, 2)};
  const riemann::Space rs{2, metric(2, up, false)};
  const TangentPoint pt{{0.5, -0.8}, {1.2, 0.3}};
  const auto c = cartan_connection(s, pt);
  CHECK(max_diff(c.L, riemann::christoffel(rs, pt.x)) < 1e-10);
  CHECK(max_abs(c.C) == 0.0);
}

TEST_CASE("constant metric without connection has zero Cartan coefficients") {
  const Space s{2, metric(2, {"2", "0.5", "3"}), {}};
  const auto c = cartan_connection(s, {{0.1, 0.2}, {0.3, 0.4}});
  CHECK(max_abs(c.L) == 0.0);
  CHECK(max_abs(c.C) == 0.0);
}

TEST_CASE("Cartan coefficients are symmetric in the lower indices") {
  const Space s = generic_space();
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const TangentPoint pt{rnd(rng, 2, -1, 1), rnd(rng, 2, 0.2, 1)};
    const auto c = cartan_connection(s, pt);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) {
          CHECK(std::abs(c.L(i, j, k) - c.L(i, k, j)) < 1e-12);
          CHECK(std::abs(c.C(i, j, k) - c.C(i, k, j)) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("h and v covariant derivatives of a (1,1) field: termwise summation") {
  const Space s = generic_space();
  const TensorField D = mixed_field(2, {"x1*y2", "sin(y1)", "x2^2 + y1*y2", "cos(x1)*y2"});
  const TangentPoint pt{{0.3, 0.6}, {0.8, -0.4}};
  const auto coords = pt.coordinates();
  const std::vector<int> seeds{0, 1, 2, 3};
  const auto jet = field_jet(D, coords, seeds, 1);
  const auto c = cartan_connection(s, pt);
  const RealTensor N = s.N.value(coords);
  const auto h = h_covariant(D, s, pt);
  const auto v = v_covariant(D, s, pt);
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 2; ++k) {
      for (int p = 0; p < 2; ++p) {
        double eh = jet.first[static_cast<std::size_t>(p)](i, k);
        double ev = jet.first[static_cast<std::size_t>(2 + p)](i, k);
        for (int m = 0; m < 2; ++m) {
          eh -= N(m, p) * jet.first[static_cast<std::size_t>(2 + m)](i, k);
          eh += jet.value(m, k) * c.L(i, m, p) - jet.value(i, m) * c.L(m, k, p);
          ev += jet.value(m, k) * c.C(i, m, p) - jet.value(i, m) * c.C(m, k, p);
        }
        CHECK(std::abs(h(i, k, p) - eh) < 1e-11);
        CHECK(std::abs(v(i, k, p) - ev) < 1e-11);
      }
    }
  }
}

TEST_CASE("constant tensor on a flat constant metric has zero covariant derivatives") {
  const Space s{2, metric(2, {"1", "0", "1"}), {}};
  const TensorField D = mixed_field(2, {"1", "2", "3", "4"});
  const TangentPoint pt{{0.3, 0.6}, {0.8, -0.4}};
  CHECK(max_abs(h_covariant(D, s, pt)) == 0.0);
  CHECK(max_abs(v_covariant(D, s, pt)) == 0.0);
}

TEST_CASE("Lagrange invariants at random points") {
  const Space s = generic_space();
  const FluidState st = generic_state();
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const TangentPoint pt{rnd(rng, 2, -1, 1), rnd(rng, 2, 0.2, 1)};
    const auto r = residuals(st, s, pt);
    for (const auto& name : invariant_names()) {
      INFO(name);
      CHECK(r.norm(name) < 1e-10);
    }
  }
}

TEST_CASE("constant scenario: every residual vanishes") {
  const Space s{2, metric(2, {"1", "0.2", "2"}), {}};
  const FluidState st{ScalarField::constant(0.5), ScalarField::constant(2), 1.0, ElectromagneticPair::zero(2)};
  const auto r = residuals(st, s, {{0.2, 0.1}, {0.5, 0.5}});
  for (const char* name : {"h_conservation", "h_continuity", "h_euler", "h_lorentz_condition", "h_lorentz_force",
                           "v_lorentz_condition", "v_lorentz_force"}) {
    INFO(name);
    CHECK(r.norm(name) == 0.0);
  }
}

TEST_CASE("y-independent scenario reduces to the Riemannian pipeline") {
  const int n = 2;
  const std::vector<std::string> up{"1 + 0.3*x1^2", "0.2*x1*x2", "2 + sin(x2)"};
  const MetricField gx = metric(n, up);
  const Space s{n, gx, canonical_connection(gx, n)};
  const riemann::Space rs{n, metric(n, up, false)};
  const std::vector<double> x0{0.4, -0.3};
  const std::vector<double> y{0.9, 0.5};
  const auto gamma = riemann::christoffel(rs, x0);
  // v^k(x) = y^k - gamma^k_jm(x0) y^j (x^m - x0^m) is covariantly constant at x0.
  std::vector<ScalarField> v;
  for (int k = 0; k < n; ++k) {
    std::string e = std::to_string(y[static_cast<std::size_t>(k)]);
    for (int j = 0; j < n; ++j) {
      for (int m = 0; m < n; ++m) {
        char buf[128];
        std::snprintf(buf, sizeof buf, " - (%.17g)*(x%d - (%.17g))", gamma(k, j, m) * y[static_cast<std::size_t>(j)],
                      m + 1, x0[static_cast<std::size_t>(m)]);
        e += buf;
      }
    }
    v.push_back(rf(e, n));
  }
  const char* p = "1 + 0.2*x1*x2";
  const char* rho = "2 + 0.1*x1";
  const riemann::ElectromagneticPair rem{TensorField::antisymmetric(n, kLatinDown, {rf("x1 + 0.5*x2^2", n)}),
                                         TensorField::antisymmetric(n, kLatinDown, {rf("cos(x1)", n)})};
  const riemann::FluidState rst{rf(p, n), rf(rho, n), 1.2, TensorField::components({n}, {kLatinUp}, v)};
  const FluidState lst{lf(p, n), lf(rho, n), 1.2,
                       {two_form(n, {"x1 + 0.5*x2^2"}), two_form(n, {"cos(x1)"})}};
  const auto rr = riemann::residuals(rst, rs, rem, x0);
  const auto lr = residuals(lst, s, {x0, y});
  for (const char* name : {"conservation", "continuity", "euler", "lorentz_condition", "lorentz_force"}) {
    INFO(name);
    CHECK(max_diff(lr.at(std::string("h_") + name), rr.at(name)) < 1e-9);
  }
  CHECK(max_diff(lr.at("stress"), rr.at("stress")) < 1e-9);

  // The vertical conservation residual is w (n - 1) u_i / eps.
  const RealTensor g = gx.g.value(TangentPoint{x0, y}.coordinates());
  double eps2 = 0.0;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) eps2 += g(a, b) * y[static_cast<std::size_t>(a)] * y[static_cast<std::size_t>(b)];
  }
  const double eps = std::sqrt(eps2);
  const double w = (2 + 0.1 * x0[0]) + (1 + 0.2 * x0[0] * x0[1]) / (1.2 * 1.2);
  const auto vc = lr.at("v_conservation");
  for (int i = 0; i < n; ++i) {
    double ui = 0.0;
    for (int m = 0; m < n; ++m) ui += g(i, m) * y[static_cast<std::size_t>(m)] / eps;
    CHECK(vc(i) == doctest::Approx(w * (n - 1) * ui / eps).epsilon(1e-12));
  }
}

TEST_CASE("non-positive g(y,y) is a normalization error") {
  const Space s{2, metric(2, {"-1", "0", "1"}), {}};
  const FluidState st{ScalarField::constant(1), ScalarField::constant(1), 1.0, ElectromagneticPair::zero(2)};
  CHECK_THROWS_AS(residuals(st, s, {{0, 0}, {1, 0.5}}), NormalizationError);
}

TEST_CASE("horizontal stream line: constant scenario has zero acceleration") {
  const Space s{2, metric(2, {"1", "0.2", "2"}), {}};
  const FluidState st{ScalarField::constant(0.5), ScalarField::constant(2), 1.0, ElectromagneticPair::zero(2)};
  const std::vector<double> x{0.1, 0.2}, xd{0.3, 0.6};
  CHECK(max_abs(h_stream_line_rhs(st, s, x, xd)) == 0.0);
  CHECK(max_abs(v_stream_constraint_residual(st, s, x, xd)) == 0.0);
}

TEST_CASE("horizontal and vertical stream-line terms: dual-path evaluation") {
  const Space s = generic_space();
  const FluidState st = generic_state();
  const std::vector<double> x{0.2, -0.4}, xd{0.6, 0.35};
  const TangentPoint pt{x, xd};
  const auto coords = pt.coordinates();
  const auto c = cartan_connection(s, pt);
  const auto r = residuals(st, s, pt);
  const RealTensor Fh = r.at("h_lorentz_force"), Fv = r.at("v_lorentz_force");
  const RealTensor dph = adapted_x_derivative(st.pressure, s, pt);
  const std::vector<int> seeds{0, 1, 2, 3};
  const auto pj = field_jet(st.pressure, coords, seeds, 1);
  const auto gj = field_jet(s.g.g, coords, seeds, 1);
  const RealTensor N = s.N.value(coords);
  const RealTensor& g = gj.value;
  const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
  const double inv[2][2] = {{g(1, 1) / det, -g(0, 1) / det}, {-g(1, 0) / det, g(0, 0) / det}};
  const double c2 = 1.3 * 1.3;
  const double k = c2 / (pj.value + st.density.value(coords) * c2);
  double e0 = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) e0 += g(a, b) * xd[static_cast<std::size_t>(a)] * xd[static_cast<std::size_t>(b)];
  }
  e0 = std::sqrt(e0);
  const auto rhs = h_stream_line_rhs(st, s, x, xd);
  const auto vres = v_stream_constraint_residual(st, s, x, xd);
  for (int a = 0; a < 2; ++a) {
    double expect = 0.0, vexpect = 0.0;
    // Summed in the opposite nesting order to the library.
    for (int m = 1; m >= 0; --m) {
      for (int rr = 1; rr >= 0; --rr) {
        const double xx = xd[static_cast<std::size_t>(rr)] * xd[static_cast<std::size_t>(m)];
        expect -= c.L(a, rr, m) * xx;
        vexpect += c.C(a, rr, m) * xx;
        if (a == rr) {
          expect += k * dph(m) * xx;
          vexpect -= k * pj.first[static_cast<std::size_t>(2 + m)] * xx;
        }
      }
      expect += k * (-inv[a][m] * dph(m));
      vexpect += k * inv[a][m] * pj.first[static_cast<std::size_t>(2 + m)];
      expect += N(a, m) * xd[static_cast<std::size_t>(m)] / e0;
      for (int rr = 0; rr < 2; ++rr) {
        for (int pp = 0; pp < 2; ++pp) {
          expect -= N(pp, m) * g(pp, rr) * xd[static_cast<std::size_t>(rr)] * xd[static_cast<std::size_t>(m)] *
                    xd[static_cast<std::size_t>(a)] / e0;
          for (int q = 0; q < 2; ++q) {
            const double cub = xd[static_cast<std::size_t>(pp)] * xd[static_cast<std::size_t>(q)] *
                               xd[static_cast<std::size_t>(a)];
            expect -= 0.5 * N(rr, m) * gj.first[static_cast<std::size_t>(2 + rr)](pp, q) * cub *
                      xd[static_cast<std::size_t>(m)];
            if (m == 0) vexpect -= 0.5 * gj.first[static_cast<std::size_t>(2 + rr)](pp, q) * cub * xd[static_cast<std::size_t>(rr)];
          }
        }
      }
    }
    expect += k * Fh(a);
    vexpect -= k * Fv(a);
    CHECK(std::abs(rhs(a) - expect) < 1e-10);
    CHECK(std::abs(vres(a) - vexpect) < 1e-10);
  }
}

TEST_CASE("Finsler: Euclidean F gives the flat metric and zero spray") {
  const auto fs = finsler_space_from_F(lf("sqrt(y1^2 + y2^2)", 2), 2);
  const std::vector<double> c{0.3, 0.4, 0.6, -0.8};
  const auto g = fs.space.g.g.value(c);
  CHECK(g(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(g(0, 1)) < 1e-14);
  CHECK(max_abs(fs.spray.value(c)) < 1e-14);
  CHECK(max_abs(fs.space.N.value(c)) < 1e-14);
}

TEST_CASE("Finsler: Riemannian F gives phi and the geodesic spray") {
  const std::vector<std::string> up{"1 + x1^2", "0.3*x2", "2 + sin(x1*x2)"};
  const auto fs = finsler_space_from_F(
      lf("sqrt((1 + x1^2)*y1^2 + 2*0.3*x2*y1*y2 + (2 + sin(x1*x2))*y2^2)", 2), 2);
  const riemann::Space rs{2, metric(2, up, false)};
  const std::vector<double> x{0.5, -0.3}, y{0.7, 1.1};
  std::vector<double> c = x;
  c.insert(c.end(), y.begin(), y.end());
  CHECK(max_diff(fs.space.g.g.value(c), rs.phi.g.value(x)) < 1e-9);
  const auto gamma = riemann::christoffel(rs, x);
  const auto G = fs.spray.value(c);
  for (int k = 0; k < 2; ++k) {
    double expect = 0.0;
    for (int p = 0; p < 2; ++p) {
      for (int q = 0; q < 2; ++q) expect += 0.5 * gamma(k, p, q) * y[static_cast<std::size_t>(p)] * y[static_cast<std::size_t>(q)];
    }
    CHECK(G(k) == doctest::Approx(expect).epsilon(1e-9).scale(1));
  }
}

namespace {

const char* kRanders = "sqrt((1 + 0.2*x1^2)*y1^2 + 0.1*x2*y1*y2 + (1.5 + 0.1*sin(x2))*y2^2) + 0.05*(x2*y1 - 0.5*x1*y2)";

}  // namespace

TEST_CASE("Finsler: Randers metric against finite differences of F^2") {
  const auto F = lf(kRanders, 2);
  const auto fs = finsler_space_from_F(F, 2);
  const std::vector<double> c{0.4, 0.7, 0.8, 0.3};
  const auto g = fs.space.g.g.value(c);
  const double h = 1e-4;
  auto F2 = [&](double dy1, double dy2) {
    auto cc = c;
    cc[2] += dy1;
    cc[3] += dy2;
    const double f = F.value(cc);
    return f * f;
  };
  const double g00 = 0.5 * (F2(h, 0) - 2 * F2(0, 0) + F2(-h, 0)) / (h * h);
  const double g11 = 0.5 * (F2(0, h) - 2 * F2(0, 0) + F2(0, -h)) / (h * h);
  const double g01 = 0.5 * (F2(h, h) - F2(h, -h) - F2(-h, h) + F2(-h, -h)) / (4 * h * h);
  CHECK(g(0, 0) == doctest::Approx(g00).epsilon(1e-6));
  CHECK(g(1, 1) == doctest::Approx(g11).epsilon(1e-6));
  CHECK(g(0, 1) == doctest::Approx(g01).epsilon(1e-6));
}

TEST_CASE("Finsler: general horizontal system equals the reduced form on unit velocities") {
  const auto fs = finsler_space_from_F(lf(kRanders, 2), 2);
  const FluidState st{lf("1 + 0.1*x1*y2", 2), lf("2 + 0.2*x2", 2), 1.1,
                      {two_form(2, {"0.3*x1 + 0.1*y1"}), two_form(2, {"x2*y2"})}};
  std::mt19937_64 rng(9);
  for (int t = 0; t < 10; ++t) {
    const auto x = rnd(rng, 2, -0.5, 0.5);
    auto xd = rnd(rng, 2, 0.2, 1.0);
    std::vector<double> c = x;
    c.insert(c.end(), xd.begin(), xd.end());
    const double F = fs.F.value(c);
    for (double& v : xd) v /= F;  // F(x, xdot) = 1
    const auto general = h_stream_line_rhs(st, fs.space, x, xd);
    const auto reduced = finsler_h_stream_line_rhs(st, fs, x, xd);
    CHECK(max_diff(general, reduced) < 1e-9);
  }
}

TEST_CASE("Finsler: vertical relation holds by homogeneity when p is y-independent and E = 0") {
  const auto fs = finsler_space_from_F(lf(kRanders, 2), 2);
  const FluidState st{lf("1 + 0.1*x1*x2", 2), lf("2 + 0.2*x2", 2), 1.0, ElectromagneticPair::zero(2)};
  const std::vector<double> x{0.2, 0.1}, xd{0.5, 0.8};
  CHECK(max_abs(v_stream_constraint_residual(st, fs.space, x, xd)) < 1e-9);
}

TEST_CASE("horizontal stream line integration in a Euclidean Lagrange space") {
  const Space s{2, metric(2, {"1", "0", "1"}), {}};
  const FluidState st{ScalarField::constant(1), ScalarField::constant(1), 1.0, ElectromagneticPair::zero(2)};
  const std::vector<double> x0{0, 0}, v0{0.6, 0.8};
  const auto rows = integrate_stream_line(st, s, x0, v0, 0.25, 4);
  REQUIRE(rows.size() == 5);
  CHECK(rows.back().x[0] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(rows.back().x[1] == doctest::Approx(0.8).epsilon(1e-14));
}
