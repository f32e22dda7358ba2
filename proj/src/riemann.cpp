#include "jetplasma/riemann.hpp"

#include <cmath>

#include "jetplasma/covariant.hpp"
#include "jetplasma/errors.hpp"

namespace jetplasma::riemann {

namespace {

struct Geometry {
  int n = 0;
  Jet jet;
  std::vector<int> dirs;
  DiffTensor phi;
  DiffTensor phi_inv;
  RealTensor gamma;

  RealTensor cov(const DiffTensor& t) const {
    return covariant_derivative(values(t), gradient(t, dirs, kLatinDown), {&gamma, nullptr});
  }
};

Geometry geometry(const Space& space, std::span<const double> x) {
  if (static_cast<int>(x.size()) != space.n) {
    throw ShapeError("point has " + std::to_string(x.size()) + " coordinates, space has dimension " +
                     std::to_string(space.n));
  }
  Geometry g;
  g.n = space.n;
  g.jet = Jet::seed(x, 1);
  g.dirs = index_range(0, space.n);
  g.phi = space.phi.g(g.jet);
  if (g.phi.rank() != 2 || g.phi.extent(0) != space.n) throw ShapeError("metric field does not match dimension");
  g.phi_inv = invert_symmetric(g.phi, "x=" + g.jet.describe());
  g.gamma = christoffel_form(values(g.phi_inv), gradient(g.phi, g.dirs, kLatinDown));
  return g;
}

struct Electromagnetic {
  EnergyParts<DiffScalar> energy;
  DiffTensor mixed_direct;
  RealTensor divergence;  // E^m_{i;m}
  RealTensor force;       // F^r = -phi^{rs} E^m_{s;m}
};

Electromagnetic electromagnetic(const Geometry& g, const ElectromagneticPair& em) {
  Electromagnetic out;
  const DiffTensor H = em.H(g.jet);
  const DiffTensor G = em.G(g.jet);
  out.energy = minkowski_energy(g.phi, g.phi_inv, H, G);
  out.mixed_direct = minkowski_mixed_direct(g.phi_inv, H, G);
  out.divergence = trace(g.cov(out.energy.mixed), 0, 2);
  out.force = raise_lower(out.divergence, 0, values(g.phi_inv));
  for (double& v : out.force.data()) v = -v;
  return out;
}

struct Fluid {
  DiffScalar p, rho, w;
  DiffTensor u_up, u_down;
  DiffScalar norm2;
};

Fluid fluid(const Geometry& g, const FluidState& state) {
  if (!(state.c > 0.0)) throw Error("speed of light c must be positive");
  if (!state.velocity) throw Error("the scenario defines no velocity field");
  Fluid f;
  f.p = state.pressure(g.jet);
  f.rho = state.density(g.jet);
  f.w = f.rho + f.p / (state.c * state.c);
  const DiffTensor v = state.velocity(g.jet);
  if (v.rank() != 1 || v.extent(0) != g.n) throw ShapeError("velocity field does not match dimension");
  DiffScalar q(0.0);
  for (int r = 0; r < g.n; ++r) {
    for (int s = 0; s < g.n; ++s) q += g.phi(r, s) * v(r) * v(s);
  }
  if (!(q.value() > 0.0)) {
    throw NormalizationError("phi(v, v) = " + std::to_string(q.value()) + " is not positive at x=" + g.jet.describe());
  }
  const DiffScalar len = sqrt(q);
  f.u_up = DiffTensor({g.n}, {kLatinUp});
  for (int i = 0; i < g.n; ++i) f.u_up(i) = v(i) / len;
  f.u_down = raise_lower(f.u_up, 0, g.phi);
  f.norm2 = DiffScalar(0.0);
  for (int i = 0; i < g.n; ++i) f.norm2 += f.u_up(i) * f.u_down(i);
  return f;
}

struct Stress {
  DiffTensor lower, mixed;
};

Stress stress(const Geometry& g, const Fluid& f, const Electromagnetic& e) {
  const int n = g.n;
  Stress s{DiffTensor({n, n}, {kLatinDown, kLatinDown}), DiffTensor({n, n}, {kLatinUp, kLatinDown})};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      s.lower(i, j) = f.w * f.u_down(i) * f.u_down(j) + f.p * g.phi(i, j) + e.energy.lower(i, j);
      s.mixed(i, j) = f.w * f.u_up(i) * f.u_down(j) + (i == j ? f.p : DiffScalar(0.0)) + e.energy.mixed(i, j);
    }
  }
  return s;
}

}  // namespace

ElectromagneticPair ElectromagneticPair::zero(int n) {
  return {TensorField::zero({n, n}, {kLatinDown, kLatinDown}), TensorField::zero({n, n}, {kLatinDown, kLatinDown})};
}

RealTensor christoffel(const Space& space, std::span<const double> x) { return geometry(space, x).gamma; }

RealTensor levi_civita_derivative(const TensorField& t, const Space& space, std::span<const double> x) {
  for (const Slot& s : t.slots()) {
    if (s.kind != IndexKind::Latin) throw ShapeError("Levi-Civita derivative needs all-latin valence");
  }
  const Geometry g = geometry(space, x);
  const DiffTensor v = t(g.jet);
  for (int e : v.extents()) {
    if (e != g.n) throw ShapeError("tensor field extent does not match the space dimension");
  }
  return g.cov(v);
}

RealTensor normalize_velocity(const FluidState& state, const Space& space, std::span<const double> x) {
  return values(fluid(geometry(space, x), state).u_up);
}

TensorPair minkowski_energy(const Space& space, const ElectromagneticPair& em, std::span<const double> x) {
  const auto e = electromagnetic(geometry(space, x), em);
  return {values(e.energy.lower), values(e.energy.mixed)};
}

RealTensor lorentz_force(const Space& space, const ElectromagneticPair& em, std::span<const double> x) {
  return electromagnetic(geometry(space, x), em).force;
}

double lorentz_condition_residual(const Space& space, const ElectromagneticPair& em, const FluidState& state,
                                  std::span<const double> x) {
  const Geometry g = geometry(space, x);
  const auto e = electromagnetic(g, em);
  const auto u = values(fluid(g, state).u_up);
  double acc = 0.0;
  for (int i = 0; i < g.n; ++i) acc += e.divergence(i) * u(i);
  return acc;
}

TensorPair stress_tensor(const FluidState& state, const Space& space, const ElectromagneticPair& em,
                         std::span<const double> x) {
  const Geometry g = geometry(space, x);
  const auto s = stress(g, fluid(g, state), electromagnetic(g, em));
  return {values(s.lower), values(s.mixed)};
}

RealTensor conservation_residual(const FluidState& state, const Space& space, const ElectromagneticPair& em,
                                 std::span<const double> x) {
  return residuals(state, space, em, x).at("conservation");
}

RealTensor conservation_divergence(const FluidState& state, const Space& space, const ElectromagneticPair& em,
                                   std::span<const double> x) {
  return residuals(state, space, em, x).at("conservation_direct");
}

double continuity_residual(const FluidState& state, const Space& space, const ElectromagneticPair& em,
                           std::span<const double> x) {
  return residuals(state, space, em, x).at("continuity").data()[0];
}

RealTensor euler_residual(const FluidState& state, const Space& space, const ElectromagneticPair& em,
                          std::span<const double> x) {
  return residuals(state, space, em, x).at("euler");
}

const std::vector<std::string>& invariant_names() {
  static const std::vector<std::string> names{
      "metric_compat",       "inverse_metric_compat", "unit_norm",          "normalization_u_du",
      "normalization_du_u",  "contraction_identity",  "euler_decomposition", "conservation_paths",
      "stress_mixed_form",   "energy_mixed_form",     "energy_mixed_identity"};
  return names;
}

ResidualReport residuals(const FluidState& state, const Space& space, const ElectromagneticPair& em,
                         std::span<const double> x) {
  const Geometry g = geometry(space, x);
  const int n = g.n;
  const auto e = electromagnetic(g, em);
  const auto f = fluid(g, state);
  const auto s = stress(g, f, e);
  const RealTensor phi = values(g.phi);
  const RealTensor u = values(f.u_up);
  const RealTensor ul = values(f.u_down);
  const double w = f.w.value();

  // [w u^m]_{;m}
  DiffTensor wu({n}, {kLatinUp});
  for (int m = 0; m < n; ++m) wu(m) = f.w * f.u_up(m);
  const double div_wu = trace(g.cov(wu), 0, 1).data()[0];
  const RealTensor du_low = g.cov(f.u_down);  // u_{i;m}
  const RealTensor du_up = g.cov(f.u_up);     // u^i_{;m}
  const RealTensor dp = gradient(f.p, g.dirs, kLatinDown);
  const RealTensor force_low = raise_lower(e.force, 0, phi);  // phi_ir F^r

  RealTensor cons({n}, {kLatinDown});
  RealTensor euler({n}, {kLatinDown});
  double cont = div_wu;
  for (int m = 0; m < n; ++m) cont += dp(m) * u(m);
  for (int i = 0; i < n; ++i) {
    double acc = div_wu * ul(i) + dp(i) - force_low(i);
    double eul = -force_low(i) + dp(i);
    for (int m = 0; m < n; ++m) {
      acc += w * u(m) * du_low(i, m);
      eul += w * du_low(i, m) * u(m) - dp(m) * u(m) * ul(i);
    }
    cons(i) = acc;
    euler(i) = eul;
  }
  const RealTensor cons_direct = trace(g.cov(s.mixed), 0, 2);
  double lorentz = 0.0;
  for (int i = 0; i < n; ++i) lorentz += e.divergence(i) * u(i);

  ResidualReport r;
  r.add("conservation", cons);
  r.add("conservation_direct", cons_direct);
  r.add("continuity", cont);
  r.add("euler", euler);
  r.add("lorentz_condition", lorentz);
  r.add("lorentz_force", e.force);
  r.add("stress", values(s.lower));
  r.add("stress_mixed", values(s.mixed));
  r.add("energy", values(e.energy.lower));
  r.add("energy_mixed", values(e.energy.mixed));

  r.add("metric_compat", g.cov(g.phi));
  r.add("inverse_metric_compat", g.cov(g.phi_inv));
  r.add("unit_norm", f.norm2.value() - 1.0);
  RealTensor u_du({n}, {kLatinDown}), du_u({n}, {kLatinDown});
  for (int m = 0; m < n; ++m) {
    for (int i = 0; i < n; ++i) {
      u_du(m) += ul(i) * du_up(i, m);
      du_u(m) += du_low(i, m) * u(i);
    }
  }
  r.add("normalization_u_du", u_du);
  r.add("normalization_du_u", du_u);
  double contraction = -cont - lorentz;
  for (int i = 0; i < n; ++i) contraction += cons(i) * u(i);
  r.add("contraction_identity", contraction);
  RealTensor decomposition = euler;
  for (int i = 0; i < n; ++i) decomposition(i) -= cons(i) - cont * ul(i);
  r.add("euler_decomposition", decomposition);
  r.add("conservation_paths", axpy(cons, -1.0, cons_direct));
  r.add("stress_mixed_form", axpy(values(s.mixed), -1.0, raise_lower(values(s.lower), 0, values(g.phi_inv))));
  r.add("energy_mixed_form",
        axpy(values(e.energy.mixed), -1.0, raise_lower(values(e.energy.lower), 0, values(g.phi_inv))));
  r.add("energy_mixed_identity", axpy(values(e.energy.mixed), -1.0, values(e.mixed_direct)));
  return r;
}

RealTensor stream_line_rhs(const FluidState& state, const Space& space, const ElectromagneticPair& em,
                           std::span<const double> x, std::span<const double> xdot) {
  const Geometry g = geometry(space, x);
  const int n = g.n;
  if (static_cast<int>(xdot.size()) != n) throw ShapeError("velocity has the wrong dimension");
  const auto e = electromagnetic(g, em);
  const DiffScalar p = state.pressure(g.jet);
  const DiffScalar rho = state.density(g.jet);
  const double c2 = state.c * state.c;
  if (inertial_factor_singular(p.value(), rho.value(), state.c)) {
    throw SingularDynamicsError("p + rho c^2 vanishes at x=" + g.jet.describe());
  }
  const double k = c2 / (p.value() + rho.value() * c2);
  const RealTensor dp = gradient(p, g.dirs, kLatinDown);
  const RealTensor phi_inv = values(g.phi_inv);
  RealTensor out({n}, {kLatinUp});
  for (int a = 0; a < n; ++a) {
    double acc = e.force(a);
    for (int m = 0; m < n; ++m) acc -= phi_inv(a, m) * dp(m);
    acc *= k;
    for (int r = 0; r < n; ++r) {
      for (int m = 0; m < n; ++m) {
        const double coef = g.gamma(a, r, m) - (a == r ? k * dp(m) : 0.0);
        acc -= coef * xdot[static_cast<std::size_t>(r)] * xdot[static_cast<std::size_t>(m)];
      }
    }
    out(a) = acc;
  }
  return out;
}

std::vector<TrajectoryRow> integrate(const Rhs& rhs, std::span<const double> x0, std::span<const double> v0, double h,
                                     int steps) {
  if (!(h > 0.0)) throw Error("step size must be positive");
  if (steps < 1) throw Error("step count must be at least 1");
  if (x0.size() != v0.size()) throw ShapeError("initial position and velocity differ in dimension");
  const std::size_t n = x0.size();
  std::vector<TrajectoryRow> rows;
  rows.reserve(static_cast<std::size_t>(steps) + 1);
  rows.push_back({0.0, {x0.begin(), x0.end()}, {v0.begin(), v0.end()}});
  std::vector<double> x(x0.begin(), x0.end()), v(v0.begin(), v0.end());
  std::vector<double> xt(n), vt(n);
  for (int step = 0; step < steps; ++step) {
    try {
      auto a1 = rhs(x, v);
      std::vector<double> k1x = v;
      for (std::size_t i = 0; i < n; ++i) {
        xt[i] = x[i] + 0.5 * h * k1x[i];
        vt[i] = v[i] + 0.5 * h * a1[i];
      }
      std::vector<double> k2x = vt;
      auto a2 = rhs(xt, vt);
      for (std::size_t i = 0; i < n; ++i) {
        xt[i] = x[i] + 0.5 * h * k2x[i];
        vt[i] = v[i] + 0.5 * h * a2[i];
      }
      std::vector<double> k3x = vt;
      auto a3 = rhs(xt, vt);
      for (std::size_t i = 0; i < n; ++i) {
        xt[i] = x[i] + h * k3x[i];
        vt[i] = v[i] + h * a3[i];
      }
      std::vector<double> k4x = vt;
      auto a4 = rhs(xt, vt);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
        v[i] += h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
      }
    } catch (const IntegrationError&) {
      throw;
    } catch (const std::exception& err) {
      throw IntegrationError(static_cast<std::size_t>(step), err.what());
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(x[i]) || !std::isfinite(v[i])) {
        throw IntegrationError(static_cast<std::size_t>(step), "state is no longer finite");
      }
    }
    rows.push_back({h * (step + 1), x, v});
  }
  return rows;
}

std::vector<TrajectoryRow> integrate_stream_line(const FluidState& state, const Space& space,
                                                 const ElectromagneticPair& em, std::span<const double> x0,
                                                 std::span<const double> v0, double h, int steps) {
  const Rhs rhs = [&](std::span<const double> x, std::span<const double> v) {
    const auto a = stream_line_rhs(state, space, em, x, v);
    return std::vector<double>(a.data().begin(), a.data().end());
  };
  return integrate(rhs, x0, v0, h, steps);
}

}  // namespace jetplasma::riemann
