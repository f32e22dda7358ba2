#include "jetplasma/lagrange.hpp"

#include <cmath>
#include <functional>

#include "jetplasma/covariant.hpp"
#include "jetplasma/errors.hpp"

namespace jetplasma::lagrange {

namespace {

struct Geometry {
  int n = 0;
  Jet jet;
  std::vector<int> xs, ys;
  RealTensor N;
  DiffTensor g, ginv;
  RealTensor L, C;

  // Trailing slot i: dt/dx^i - N^m_i dt/dy^m.
  RealTensor delta(const RealTensor& gx, const RealTensor& gy) const {
    RealTensor out = gx;
    const std::size_t rows = gx.size() / static_cast<std::size_t>(n);
    for (std::size_t r = 0; r < rows; ++r) {
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int m = 0; m < n; ++m) acc += N(m, i) * gy.data()[r * static_cast<std::size_t>(n) + static_cast<std::size_t>(m)];
        out.data()[r * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] -= acc;
      }
    }
    return out;
  }
  RealTensor delta(const DiffTensor& t) const {
    return delta(gradient(t, xs, kLatinDown), gradient(t, ys, kLatinDown));
  }
  RealTensor delta(const DiffScalar& s) const {
    return delta(gradient(s, xs, kLatinDown), gradient(s, ys, kLatinDown));
  }
  RealTensor dy(const DiffTensor& t) const { return gradient(t, ys, kLatinDown); }
  RealTensor dy(const DiffScalar& s) const { return gradient(s, ys, kLatinDown); }
  RealTensor hcov(const DiffTensor& t) const { return covariant_derivative(values(t), delta(t), {&L, nullptr}); }
  RealTensor vcov(const DiffTensor& t) const { return covariant_derivative(values(t), dy(t), {&C, nullptr}); }
};

void check_point(int n, std::span<const double> x, std::span<const double> y) {
  if (static_cast<int>(x.size()) != n || static_cast<int>(y.size()) != n) {
    throw ShapeError("tangent point does not match the space dimension " + std::to_string(n));
  }
}

RealTensor connection_value(const Space& space, std::span<const double> coords) {
  if (!space.N) return RealTensor({space.n, space.n}, {kLatinUp, kLatinDown});
  const DiffTensor N = space.N(Jet::seed(coords, 0));
  if (N.rank() != 2 || N.extent(0) != space.n || N.extent(1) != space.n) {
    throw ShapeError("nonlinear connection does not match the space dimension");
  }
  return values(N);
}

Geometry geometry(const Space& space, std::span<const double> x, std::span<const double> y) {
  check_point(space.n, x, y);
  std::vector<double> coords(x.begin(), x.end());
  coords.insert(coords.end(), y.begin(), y.end());
  Geometry g;
  g.n = space.n;
  g.jet = Jet::seed(coords, 1);
  g.xs = index_range(0, space.n);
  g.ys = index_range(space.n, space.n);
  g.N = connection_value(space, coords);
  g.g = space.g.g(g.jet);
  if (g.g.rank() != 2 || g.g.extent(0) != space.n) throw ShapeError("metric field does not match dimension");
  g.ginv = invert_symmetric(g.g, "(x, y)=" + g.jet.describe());
  const RealTensor ginv = values(g.ginv);
  g.L = christoffel_form(ginv, g.delta(g.g));
  g.C = christoffel_form(ginv, g.dy(g.g));
  return g;
}

struct Fluid {
  DiffScalar p, rho, w, eps;
  DiffTensor u_up, u_down;
};

Fluid fluid(const Geometry& g, const FluidState& state) {
  if (!(state.c > 0.0)) throw Error("speed of light c must be positive");
  Fluid f;
  f.p = state.pressure(g.jet);
  f.rho = state.density(g.jet);
  f.w = f.rho + f.p / (state.c * state.c);
  DiffScalar e2(0.0);
  for (int p = 0; p < g.n; ++p) {
    for (int q = 0; q < g.n; ++q) e2 += g.g(p, q) * g.jet.var(g.n + p) * g.jet.var(g.n + q);
  }
  if (!(e2.value() > 0.0)) {
    throw NormalizationError("g(y, y) = " + std::to_string(e2.value()) + " is not positive at (x, y)=" +
                             g.jet.describe());
  }
  f.eps = sqrt(e2);
  f.u_up = DiffTensor({g.n}, {kLatinUp});
  for (int i = 0; i < g.n; ++i) f.u_up(i) = g.jet.var(g.n + i) / f.eps;
  f.u_down = raise_lower(f.u_up, 0, g.g);
  return f;
}

struct Electromagnetic {
  EnergyParts<DiffScalar> energy;
  DiffTensor mixed_direct;
};

Electromagnetic electromagnetic(const Geometry& g, const ElectromagneticPair& em) {
  const DiffTensor H = em.H(g.jet);
  const DiffTensor G = em.G(g.jet);
  return {minkowski_energy(g.g, g.ginv, H, G), minkowski_mixed_direct(g.ginv, H, G)};
}

struct Stress {
  DiffTensor lower, mixed;
};

Stress stress(const Geometry& g, const Fluid& f, const Electromagnetic& e) {
  const int n = g.n;
  Stress s{DiffTensor({n, n}, {kLatinDown, kLatinDown}), DiffTensor({n, n}, {kLatinUp, kLatinDown})};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      s.lower(i, j) = f.w * f.u_down(i) * f.u_down(j) + f.p * g.g(i, j) + e.energy.lower(i, j);
      s.mixed(i, j) = f.w * f.u_up(i) * f.u_down(j) + (i == j ? f.p : DiffScalar(0.0)) + e.energy.mixed(i, j);
    }
  }
  return s;
}

// F^r = -g^{rs} E^m_{s.m} for one channel.
RealTensor channel_force(const Geometry& g, const Electromagnetic& e,
                         const std::function<RealTensor(const DiffTensor&)>& cov, RealTensor* divergence) {
  RealTensor div = trace(cov(e.energy.mixed), 0, 2);
  RealTensor force = raise_lower(div, 0, values(g.ginv));
  for (double& v : force.data()) v = -v;
  if (divergence) *divergence = div;
  return force;
}

void channel(ResidualReport& r, const std::string& pre, const Geometry& g, const Fluid& f, const Electromagnetic& e,
             const Stress& s, const std::function<RealTensor(const DiffTensor&)>& cov, const RealTensor& dp) {
  const int n = g.n;
  const RealTensor u = values(f.u_up);
  const RealTensor ul = values(f.u_down);
  const double w = f.w.value();
  RealTensor div;
  const RealTensor force = channel_force(g, e, cov, &div);
  const RealTensor force_low = raise_lower(force, 0, values(g.g));

  DiffTensor wu({n}, {kLatinUp});
  for (int m = 0; m < n; ++m) wu(m) = f.w * f.u_up(m);
  const double div_wu = trace(cov(wu), 0, 1).data()[0];
  const RealTensor du_low = cov(f.u_down);
  const RealTensor du_up = cov(f.u_up);

  RealTensor cons({n}, {kLatinDown}), euler({n}, {kLatinDown});
  double cont = div_wu;
  for (int m = 0; m < n; ++m) cont += dp(m) * u(m);
  for (int i = 0; i < n; ++i) {
    double acc = div_wu * ul(i) + dp(i) - force_low(i);
    double eul = dp(i) - force_low(i);
    for (int m = 0; m < n; ++m) {
      acc += w * u(m) * du_low(i, m);
      eul += w * du_low(i, m) * u(m) - dp(m) * u(m) * ul(i);
    }
    cons(i) = acc;
    euler(i) = eul;
  }
  const RealTensor direct = trace(cov(s.mixed), 0, 2);
  double lorentz = 0.0;
  for (int i = 0; i < n; ++i) lorentz += div(i) * u(i);

  r.add(pre + "conservation", cons);
  r.add(pre + "conservation_direct", direct);
  r.add(pre + "continuity", cont);
  r.add(pre + "euler", euler);
  r.add(pre + "lorentz_condition", lorentz);
  r.add(pre + "lorentz_force", force);

  r.add(pre + "metric_compat", cov(g.g));
  r.add(pre + "inverse_metric_compat", cov(g.ginv));
  RealTensor u_du({n}, {kLatinDown}), du_u({n}, {kLatinDown});
  for (int m = 0; m < n; ++m) {
    for (int i = 0; i < n; ++i) {
      u_du(m) += ul(i) * du_up(i, m);
      du_u(m) += du_low(i, m) * u(i);
    }
  }
  r.add(pre + "normalization_u_du", u_du);
  r.add(pre + "normalization_du_u", du_u);
  double contraction = -cont - lorentz;
  for (int i = 0; i < n; ++i) contraction += cons(i) * u(i);
  r.add(pre + "contraction_identity", contraction);
  RealTensor decomposition = euler;
  for (int i = 0; i < n; ++i) decomposition(i) -= cons(i) - cont * ul(i);
  r.add(pre + "euler_decomposition", decomposition);
  r.add(pre + "conservation_paths", axpy(cons, -1.0, direct));
}

struct StreamTerms {
  Geometry geo;
  double k = 0.0;
  double eps0 = 0.0;
  RealTensor dp_h, dp_v, force_h, force_v, ginv, gval;
};

StreamTerms stream_terms(const FluidState& state, const Space& space, std::span<const double> x,
                         std::span<const double> xdot) {
  StreamTerms t;
  t.geo = geometry(space, x, xdot);
  const Geometry& g = t.geo;
  const DiffScalar p = state.pressure(g.jet);
  const DiffScalar rho = state.density(g.jet);
  if (!(state.c > 0.0)) throw Error("speed of light c must be positive");
  if (inertial_factor_singular(p.value(), rho.value(), state.c)) {
    throw SingularDynamicsError("p + rho c^2 vanishes at (x, y)=" + g.jet.describe());
  }
  const double c2 = state.c * state.c;
  t.k = c2 / (p.value() + rho.value() * c2);
  t.gval = values(g.g);
  t.ginv = values(g.ginv);
  double e2 = 0.0;
  for (int a = 0; a < g.n; ++a) {
    for (int b = 0; b < g.n; ++b) e2 += t.gval(a, b) * xdot[static_cast<std::size_t>(a)] * xdot[static_cast<std::size_t>(b)];
  }
  if (!(e2 > 0.0)) {
    throw NormalizationError("g(x, dx/ds)(dx/ds, dx/ds) = " + std::to_string(e2) + " is not positive at (x, y)=" +
                             g.jet.describe());
  }
  t.eps0 = std::sqrt(e2);
  t.dp_h = g.delta(p);
  t.dp_v = g.dy(p);
  const Electromagnetic e = electromagnetic(g, state.em);
  t.force_h = channel_force(g, e, [&](const DiffTensor& d) { return g.hcov(d); }, nullptr);
  t.force_v = channel_force(g, e, [&](const DiffTensor& d) { return g.vcov(d); }, nullptr);
  return t;
}

// -[L - k delta p_,,] xdot xdot + k [F_h - g^{km} p_,,m]
RealTensor h_common(const StreamTerms& t, std::span<const double> xd) {
  const int n = t.geo.n;
  RealTensor out({n}, {kLatinUp});
  for (int a = 0; a < n; ++a) {
    double acc = t.force_h(a);
    for (int m = 0; m < n; ++m) acc -= t.ginv(a, m) * t.dp_h(m);
    acc *= t.k;
    for (int r = 0; r < n; ++r) {
      for (int m = 0; m < n; ++m) {
        const double coef = t.geo.L(a, r, m) - (a == r ? t.k * t.dp_h(m) : 0.0);
        acc -= coef * xd[static_cast<std::size_t>(r)] * xd[static_cast<std::size_t>(m)];
      }
    }
    out(a) = acc;
  }
  return out;
}

}  // namespace

std::vector<double> TangentPoint::coordinates() const {
  std::vector<double> c = x;
  c.insert(c.end(), y.begin(), y.end());
  return c;
}

TensorField canonical_connection(const MetricField& metric, int n) {
  return TensorField({n, n}, {kLatinUp, kLatinDown}, [metric, n](const Jet& jet) {
    if (jet.size() != 2 * n) throw ShapeError("canonical connection needs a tangent-bundle jet");
    const int k = jet.order();
    const Jet up = jet.with_order(k + 1);
    const DiffTensor g = metric.g(up);
    const DiffTensor ginv = invert_symmetric(g, "(x, y)=" + jet.describe());
    std::vector<DiffTensor> dg;  // dg[c](a, b) = d g_ab / dx^c
    for (int c = 0; c < n; ++c) dg.push_back(partial_field(g, c));
    DiffTensor N({n, n}, {kLatinUp, kLatinDown});
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        DiffScalar acc(0.0);
        for (int m = 0; m < n; ++m) {
          DiffScalar gamma(0.0);
          for (int q = 0; q < n; ++q) {
            gamma += ginv(i, q) * (dg[static_cast<std::size_t>(m)](j, q) + dg[static_cast<std::size_t>(j)](m, q) -
                                   dg[static_cast<std::size_t>(q)](j, m));
          }
          acc += 0.5 * gamma * jet.var(n + m);
        }
        N(i, j) = acc.truncated(k);
      }
    }
    return N;
  });
}

RealTensor adapted_x_derivative(const ScalarField& f, const Space& space, const TangentPoint& pt) {
  check_point(space.n, pt.x, pt.y);
  const auto coords = pt.coordinates();
  Geometry g;
  g.n = space.n;
  g.N = connection_value(space, coords);
  const Jet jet = Jet::seed(coords, 1);
  return g.delta(gradient(f(jet), index_range(0, space.n), kLatinDown),
                 gradient(f(jet), index_range(space.n, space.n), kLatinDown));
}

CartanConnection cartan_connection(const Space& space, const TangentPoint& pt) {
  const Geometry g = geometry(space, pt.x, pt.y);
  return {g.L, g.C};
}

namespace {

DiffTensor latin_field(const TensorField& t, const Geometry& g) {
  for (const Slot& s : t.slots()) {
    if (s.kind != IndexKind::Latin) throw ShapeError("h/v covariant derivative needs all-latin valence");
  }
  DiffTensor v = t(g.jet);
  for (int e : v.extents()) {
    if (e != g.n) throw ShapeError("tensor field extent does not match the space dimension");
  }
  return v;
}

}  // namespace

RealTensor h_covariant(const TensorField& t, const Space& space, const TangentPoint& pt) {
  const Geometry g = geometry(space, pt.x, pt.y);
  return g.hcov(latin_field(t, g));
}

RealTensor v_covariant(const TensorField& t, const Space& space, const TangentPoint& pt) {
  const Geometry g = geometry(space, pt.x, pt.y);
  return g.vcov(latin_field(t, g));
}

const std::vector<std::string>& invariant_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v{"unit_norm", "stress_mixed_form", "energy_mixed_form", "energy_mixed_identity"};
    for (const char* pre : {"h_", "v_"}) {
      for (const char* s : {"metric_compat", "inverse_metric_compat", "normalization_u_du", "normalization_du_u",
                            "contraction_identity", "euler_decomposition", "conservation_paths"}) {
        v.push_back(std::string(pre) + s);
      }
    }
    return v;
  }();
  return names;
}

ResidualReport residuals(const FluidState& state, const Space& space, const TangentPoint& pt) {
  const Geometry g = geometry(space, pt.x, pt.y);
  const Fluid f = fluid(g, state);
  const Electromagnetic e = electromagnetic(g, state.em);
  const Stress s = stress(g, f, e);
  ResidualReport r;
  channel(r, "h_", g, f, e, s, [&](const DiffTensor& t) { return g.hcov(t); }, g.delta(f.p));
  channel(r, "v_", g, f, e, s, [&](const DiffTensor& t) { return g.vcov(t); }, g.dy(f.p));
  r.add("stress", values(s.lower));
  r.add("stress_mixed", values(s.mixed));
  r.add("energy", values(e.energy.lower));
  r.add("energy_mixed", values(e.energy.mixed));

  double norm = -1.0;
  for (int i = 0; i < g.n; ++i) norm += f.u_up(i).value() * f.u_down(i).value();
  r.add("unit_norm", norm);
  const RealTensor ginv = values(g.ginv);
  r.add("stress_mixed_form", axpy(values(s.mixed), -1.0, raise_lower(values(s.lower), 0, ginv)));
  r.add("energy_mixed_form", axpy(values(e.energy.mixed), -1.0, raise_lower(values(e.energy.lower), 0, ginv)));
  r.add("energy_mixed_identity", axpy(values(e.energy.mixed), -1.0, values(e.mixed_direct)));
  return r;
}

RealTensor h_stream_line_rhs(const FluidState& state, const Space& space, std::span<const double> x,
                             std::span<const double> xdot) {
  const StreamTerms t = stream_terms(state, space, x, xdot);
  const int n = t.geo.n;
  const RealTensor dgy = t.geo.dy(t.geo.g);  // [p, q, r] = dg_pq/dy^r
  auto xd = [&](int i) { return xdot[static_cast<std::size_t>(i)]; };
  RealTensor out = h_common(t, xdot);
  double nr = 0.0;   // N^p_m g_pr xdot^r xdot^m
  double cub = 0.0;  // N^r_m dg_pq/dy^r xdot^p xdot^q xdot^m
  for (int p = 0; p < n; ++p) {
    for (int m = 0; m < n; ++m) {
      for (int r = 0; r < n; ++r) nr += t.geo.N(p, m) * t.gval(p, r) * xd(r) * xd(m);
    }
  }
  for (int r = 0; r < n; ++r) {
    for (int m = 0; m < n; ++m) {
      for (int p = 0; p < n; ++p) {
        for (int q = 0; q < n; ++q) cub += t.geo.N(r, m) * dgy(p, q, r) * xd(p) * xd(q) * xd(m);
      }
    }
  }
  for (int a = 0; a < n; ++a) {
    double nm = 0.0;
    for (int m = 0; m < n; ++m) nm += t.geo.N(a, m) * xd(m);
    out(a) += nm / t.eps0 - nr * xd(a) / t.eps0 - 0.5 * cub * xd(a);
  }
  return out;
}

RealTensor v_stream_constraint_residual(const FluidState& state, const Space& space, std::span<const double> x,
                                        std::span<const double> xdot) {
  const StreamTerms t = stream_terms(state, space, x, xdot);
  const int n = t.geo.n;
  const RealTensor dgy = t.geo.dy(t.geo.g);
  auto xd = [&](int i) { return xdot[static_cast<std::size_t>(i)]; };
  double cub = 0.0;  // dg_pq/dy^r xdot^p xdot^q xdot^r
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      for (int r = 0; r < n; ++r) cub += dgy(p, q, r) * xd(p) * xd(q) * xd(r);
    }
  }
  RealTensor out({n}, {kLatinUp});
  for (int a = 0; a < n; ++a) {
    double lhs = 0.0;
    for (int r = 0; r < n; ++r) {
      for (int m = 0; m < n; ++m) {
        lhs += (t.geo.C(a, r, m) - (a == r ? t.k * t.dp_v(m) : 0.0)) * xd(r) * xd(m);
      }
    }
    double rhs = t.force_v(a);
    for (int m = 0; m < n; ++m) rhs -= t.ginv(a, m) * t.dp_v(m);
    rhs = t.k * rhs + 0.5 * cub * xd(a);
    out(a) = lhs - rhs;
  }
  return out;
}

std::vector<TrajectoryRow> integrate_stream_line(const FluidState& state, const Space& space,
                                                 std::span<const double> x0, std::span<const double> v0, double h,
                                                 int steps) {
  const riemann::Rhs rhs = [&](std::span<const double> x, std::span<const double> v) {
    const auto a = h_stream_line_rhs(state, space, x, v);
    return std::vector<double>(a.data().begin(), a.data().end());
  };
  return riemann::integrate(rhs, x0, v0, h, steps);
}

FinslerSpace finsler_space_from_F(const ScalarField& F, int n) {
  // g_ij = 1/2 d^2(F^2)/dy^i dy^j on a jet of order k needs F^2 to order k + 2.
  auto metric = [F, n](const Jet& jet) {
    if (jet.size() != 2 * n) throw ShapeError("Finsler metric needs a tangent-bundle jet");
    const int k = jet.order();
    if (k + 2 > kMaxDerivativeOrder) throw Error("Finsler metric is available on jets of order <= 1");
    const Jet up = jet.with_order(k + 2);
    const DiffScalar f = F(up);
    const DiffScalar F2 = f * f;
    DiffTensor g({n, n}, {kLatinDown, kLatinDown});
    for (int i = 0; i < n; ++i) {
      const DiffScalar di = F2.partial(n + i);
      for (int j = i; j < n; ++j) {
        g(i, j) = 0.5 * di.partial(n + j);
        g(j, i) = g(i, j);
      }
    }
    return g;
  };
  // G^k = 1/4 g^{kl} (d^2F^2/dy^l dx^q y^q - dF^2/dx^l), order k needs F^2 to order k + 2.
  auto spray = [F, n](const Jet& jet) {
    if (jet.size() != 2 * n) throw ShapeError("Finsler spray needs a tangent-bundle jet");
    const int k = jet.order();
    if (k + 2 > kMaxDerivativeOrder) throw Error("Finsler spray is available on jets of order <= 1");
    const Jet up = jet.with_order(k + 2);
    const DiffScalar f = F(up);
    const DiffScalar F2 = f * f;
    DiffTensor g({n, n}, {kLatinDown, kLatinDown});
    std::vector<DiffScalar> dy(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) dy[static_cast<std::size_t>(i)] = F2.partial(n + i);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        g(i, j) = 0.5 * dy[static_cast<std::size_t>(i)].partial(n + j);
        g(j, i) = g(i, j);
      }
    }
    const DiffTensor ginv = invert_symmetric(g, "(x, y)=" + jet.describe());
    std::vector<DiffScalar> b(static_cast<std::size_t>(n));
    for (int l = 0; l < n; ++l) {
      DiffScalar acc = -F2.partial(l);
      for (int q = 0; q < n; ++q) acc += dy[static_cast<std::size_t>(l)].partial(q) * jet.var(n + q);
      b[static_cast<std::size_t>(l)] = acc;
    }
    DiffTensor G({n}, {kLatinUp});
    for (int a = 0; a < n; ++a) {
      DiffScalar acc(0.0);
      for (int l = 0; l < n; ++l) acc += ginv(a, l) * b[static_cast<std::size_t>(l)];
      G(a) = (0.25 * acc).truncated(k);
    }
    return G;
  };
  TensorField spray_field({n}, {kLatinUp}, spray);
  // N^i_j = dG^i/dy^j: the spray one order higher.
  auto connection = [spray, n](const Jet& jet) {
    const DiffTensor G = spray(jet.with_order(jet.order() + 1));
    DiffTensor N({n, n}, {kLatinUp, kLatinDown});
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) N(i, j) = G(i).partial(n + j);
    }
    return N;
  };
  FinslerSpace fs;
  fs.space = {n, MetricField{TensorField({n, n}, {kLatinDown, kLatinDown}, metric), {}},
              TensorField({n, n}, {kLatinUp, kLatinDown}, connection)};
  fs.F = F;
  fs.spray = spray_field;
  return fs;
}

RealTensor finsler_h_stream_line_rhs(const FluidState& state, const FinslerSpace& fs, std::span<const double> x,
                                     std::span<const double> xdot) {
  const StreamTerms t = stream_terms(state, fs.space, x, xdot);
  const int n = t.geo.n;
  auto xd = [&](int i) { return xdot[static_cast<std::size_t>(i)]; };
  std::vector<double> coords(x.begin(), x.end());
  coords.insert(coords.end(), xdot.begin(), xdot.end());
  const RealTensor G = fs.spray.value(coords);
  const double F = fs.F.value(coords);
  double gg = 0.0;
  for (int p = 0; p < n; ++p) {
    for (int r = 0; r < n; ++r) gg += t.gval(p, r) * G(p) * xd(r);
  }
  RealTensor out = h_common(t, xdot);
  for (int a = 0; a < n; ++a) out(a) += 2.0 / (F * F) * (G(a) - gg * xd(a));
  return out;
}

}  // namespace jetplasma::lagrange
