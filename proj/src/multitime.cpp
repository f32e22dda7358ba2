#include "jetplasma/multitime.hpp"

#include <cmath>
#include <functional>
#include <utility>

#include "jetplasma/covariant.hpp"
#include "jetplasma/errors.hpp"

namespace jetplasma::multitime {

namespace {

using Direction = std::vector<std::pair<int, double>>;

// out[.., d] = sum over (v, c) in dirs[d] of c * dt/d(seed v).
RealTensor directional(const DiffTensor& t, const std::vector<Direction>& dirs, Slot slot) {
  auto extents = t.extents();
  auto slots = t.slots();
  extents.push_back(static_cast<int>(dirs.size()));
  slots.push_back(slot);
  RealTensor out(extents, slots);
  const std::size_t nd = dirs.size();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const DiffScalar& s = t.data()[i];
    for (std::size_t d = 0; d < nd; ++d) {
      double acc = 0.0;
      for (const auto& [v, c] : dirs[d]) acc += c * s.d(v);
      out.data()[i * nd + d] = acc;
    }
  }
  return out;
}

void check_positive_definite(const RealTensor& h, const std::string& where) {
  const int p = h.extent(0);
  std::vector<double> l(static_cast<std::size_t>(p * p), 0.0);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = h(i, j);
      for (int k = 0; k < j; ++k) s -= l[static_cast<std::size_t>(i * p + k)] * l[static_cast<std::size_t>(j * p + k)];
      if (i == j) {
        if (!(s > 0.0)) throw DegenerateMetricError("temporal metric h is not positive definite at " + where);
        l[static_cast<std::size_t>(i * p + i)] = std::sqrt(s);
      } else {
        l[static_cast<std::size_t>(i * p + j)] = s / l[static_cast<std::size_t>(j * p + j)];
      }
    }
  }
}

struct Geometry {
  int p = 0, n = 0;
  Jet jet;
  std::vector<double> xv;  // x^i_a values, [i * p + a]
  DiffTensor h, hinv, g, ginv;
  RealTensor kappa, N, G, L;
  std::vector<RealTensor> C;  // C[c](i, j, k) = C^{i(c)}_{j(k)}
  std::vector<Direction> dirs_t, dirs_x;
  std::vector<std::vector<Direction>> dirs_fiber;  // per greek eps, n directions

  int fiber(int i, int a) const { return jet_fiber_index(n, p, i, a); }
  double x(int i, int a) const { return xv[static_cast<std::size_t>(i * p + a)]; }

  RealTensor dT(const DiffTensor& t) const { return directional(t, dirs_t, kGreekDown); }
  RealTensor dX(const DiffTensor& t) const { return directional(t, dirs_x, kLatinDown); }
  RealTensor dF(const DiffTensor& t, int eps) const {
    return directional(t, dirs_fiber[static_cast<std::size_t>(eps)], kLatinDown);
  }
  RealTensor dT(const DiffScalar& s) const { return dT(DiffTensor::scalar(s)); }
  RealTensor dX(const DiffScalar& s) const { return dX(DiffTensor::scalar(s)); }
  // [m, mu] = ds/dx^m_mu
  RealTensor dF(const DiffScalar& s) const {
    RealTensor out({n, p}, {kLatinDown, kGreekUp});
    for (int m = 0; m < n; ++m) {
      for (int a = 0; a < p; ++a) out(m, a) = s.d(fiber(m, a));
    }
    return out;
  }

  RealTensor hT(const DiffTensor& t) const { return covariant_derivative(values(t), dT(t), {&G, &kappa}); }
  RealTensor hM(const DiffTensor& t) const { return covariant_derivative(values(t), dX(t), {&L, nullptr}); }
  RealTensor v(const DiffTensor& t) const {
    auto extents = t.extents();
    auto slots = t.slots();
    extents.push_back(p);
    extents.push_back(n);
    slots.push_back(kGreekUp);
    slots.push_back(kLatinDown);
    RealTensor out(extents, slots);
    const RealTensor val = values(t);
    const std::size_t block = static_cast<std::size_t>(n);
    for (int e = 0; e < p; ++e) {
      const RealTensor d = covariant_derivative(val, dF(t, e), {&C[static_cast<std::size_t>(e)], nullptr});
      for (std::size_t r = 0; r < t.size(); ++r) {
        for (std::size_t k = 0; k < block; ++k) {
          out.data()[(r * static_cast<std::size_t>(p) + static_cast<std::size_t>(e)) * block + k] =
              d.data()[r * block + k];
        }
      }
    }
    return out;
  }
};

void check_point(const Space& s, const JetPoint& jp) {
  if (static_cast<int>(jp.t.size()) != s.p || static_cast<int>(jp.x.size()) != s.n ||
      static_cast<int>(jp.xdot.size()) != s.n * s.p) {
    throw ShapeError("jet point does not match p = " + std::to_string(s.p) + ", n = " + std::to_string(s.n));
  }
}

RealTensor connection_value(const Space& s, std::span<const double> coords) {
  if (!s.N) return RealTensor({s.n, s.p, s.n}, {kLatinUp, kGreekDown, kLatinDown});
  const DiffTensor N = s.N(Jet::seed(coords, 0));
  if (N.rank() != 3 || N.extent(0) != s.n || N.extent(1) != s.p || N.extent(2) != s.n) {
    throw ShapeError("nonlinear connection does not match (n, p, n)");
  }
  return values(N);
}

Geometry geometry(const Space& s, const JetPoint& jp) {
  check_point(s, jp);
  Geometry g;
  g.p = s.p;
  g.n = s.n;
  const auto coords = jp.coordinates();
  g.jet = Jet::seed(coords, 1);
  g.xv = jp.xdot;
  const std::string where = "(t, x, x_a)=" + g.jet.describe();

  g.h = s.h.g(g.jet);
  if (g.h.rank() != 2 || g.h.extent(0) != s.p) throw ShapeError("temporal metric does not match p");
  check_positive_definite(values(g.h), where);
  g.hinv = invert_symmetric(g.h, where);
  {
    const auto ts = index_range(0, s.p);
    g.kappa = christoffel_form(values(g.hinv), gradient(g.h, ts, kGreekDown));
  }
  g.N = connection_value(s, coords);

  // delta/delta t^a = d/dt^a + kappa^c_{a mu} x^m_c d/dx^m_mu
  for (int a = 0; a < s.p; ++a) {
    Direction d{{a, 1.0}};
    for (int m = 0; m < s.n; ++m) {
      for (int mu = 0; mu < s.p; ++mu) {
        double c = 0.0;
        for (int q = 0; q < s.p; ++q) c += g.kappa(q, a, mu) * g.x(m, q);
        if (c != 0.0) d.emplace_back(g.fiber(m, mu), c);
      }
    }
    g.dirs_t.push_back(std::move(d));
  }
  // delta/delta x^i = d/dx^i - N^{(m)}_{(mu)i} d/dx^m_mu
  for (int i = 0; i < s.n; ++i) {
    Direction d{{s.p + i, 1.0}};
    for (int m = 0; m < s.n; ++m) {
      for (int mu = 0; mu < s.p; ++mu) {
        if (g.N(m, mu, i) != 0.0) d.emplace_back(g.fiber(m, mu), -g.N(m, mu, i));
      }
    }
    g.dirs_x.push_back(std::move(d));
  }
  for (int e = 0; e < s.p; ++e) {
    std::vector<Direction> ds;
    for (int k = 0; k < s.n; ++k) ds.push_back({{g.fiber(k, e), 1.0}});
    g.dirs_fiber.push_back(std::move(ds));
  }

  g.g = s.g.g(g.jet);
  if (g.g.rank() != 2 || g.g.extent(0) != s.n) throw ShapeError("spatial metric does not match n");
  g.ginv = invert_symmetric(g.g, where);
  const RealTensor ginv = values(g.ginv);
  const RealTensor dtg = g.dT(g.g);  // [m, j, c]
  g.G = RealTensor({s.n, s.n, s.p}, {kLatinUp, kLatinDown, kGreekDown});
  for (int k = 0; k < s.n; ++k) {
    for (int j = 0; j < s.n; ++j) {
      for (int c = 0; c < s.p; ++c) {
        double acc = 0.0;
        for (int m = 0; m < s.n; ++m) acc += ginv(k, m) * dtg(m, j, c);
        g.G(k, j, c) = 0.5 * acc;
      }
    }
  }
  g.L = christoffel_form(ginv, g.dX(g.g));
  for (int e = 0; e < s.p; ++e) g.C.push_back(christoffel_form(ginv, g.dF(g.g, e)));
  return g;
}

struct Fluid {
  DiffScalar p, rho, w, eps;
  DiffTensor u_up, u_down;  // [i, a]
};

DiffScalar epsilon_squared(const Geometry& g) {
  DiffScalar e2(0.0);
  for (int mu = 0; mu < g.p; ++mu) {
    for (int nu = 0; nu < g.p; ++nu) {
      for (int a = 0; a < g.n; ++a) {
        for (int b = 0; b < g.n; ++b) {
          e2 += g.hinv(mu, nu) * g.g(a, b) * g.jet.var(g.fiber(a, mu)) * g.jet.var(g.fiber(b, nu));
        }
      }
    }
  }
  return e2;
}

Fluid fluid(const Geometry& g, const FluidState* state) {
  Fluid f;
  if (state) {
    if (!(state->c > 0.0)) throw Error("speed of light c must be positive");
    f.p = state->pressure(g.jet);
    f.rho = state->density(g.jet);
    f.w = f.rho + f.p / (state->c * state->c);
  }
  const DiffScalar e2 = epsilon_squared(g);
  if (!(e2.value() > 0.0)) {
    throw NormalizationError("eps^2 = h^{mu nu} g_pq x^p_mu x^q_nu = " + std::to_string(e2.value()) +
                             " is not positive at (t, x, x_a)=" + g.jet.describe());
  }
  f.eps = sqrt(e2);
  f.u_up = DiffTensor({g.n, g.p}, {kLatinUp, kGreekDown});
  for (int i = 0; i < g.n; ++i) {
    for (int a = 0; a < g.p; ++a) f.u_up(i, a) = g.jet.var(g.fiber(i, a)) / f.eps;
  }
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
      DiffScalar lo(0.0), mi(0.0);
      for (int a = 0; a < g.p; ++a) {
        for (int b = 0; b < g.p; ++b) {
          lo += g.hinv(a, b) * f.u_down(i, a) * f.u_down(j, b);
          mi += g.hinv(a, b) * f.u_up(i, a) * f.u_down(j, b);
        }
      }
      s.lower(i, j) = f.w * lo + f.p * g.g(i, j) + e.energy.lower(i, j);
      s.mixed(i, j) = f.w * mi + (i == j ? f.p : DiffScalar(0.0)) + e.energy.mixed(i, j);
    }
  }
  return s;
}

struct Forces {
  RealTensor div_h;  // E^m_{i|m}, [i]
  RealTensor force_h;
  RealTensor div_v;  // E^m_i|^(mu)_(m), [i, mu]
  RealTensor force_v;
};

Forces forces(const Geometry& g, const Electromagnetic& e) {
  Forces f;
  const RealTensor ginv = values(g.ginv);
  f.div_h = trace(g.hM(e.energy.mixed), 0, 2);
  f.force_h = raise_lower(f.div_h, 0, ginv);
  for (double& v : f.force_h.data()) v = -v;
  f.div_v = trace(g.v(e.energy.mixed), 0, 3);
  f.force_v = raise_lower(f.div_v, 0, ginv);
  for (double& v : f.force_v.data()) v = -v;
  return f;
}

}  // namespace

std::vector<double> JetPoint::coordinates() const {
  std::vector<double> c = t;
  c.insert(c.end(), x.begin(), x.end());
  c.insert(c.end(), xdot.begin(), xdot.end());
  return c;
}

RealTensor temporal_christoffel(const Space& space, std::span<const double> t) {
  if (static_cast<int>(t.size()) != space.p) throw ShapeError("time point does not match p");
  JetPoint jp{{t.begin(), t.end()}, std::vector<double>(static_cast<std::size_t>(space.n), 0.0),
              std::vector<double>(static_cast<std::size_t>(space.n * space.p), 0.0)};
  const Jet jet = Jet::seed(jp.coordinates(), 1);
  const DiffTensor h = space.h.g(jet);
  const std::string where = "t=" + Jet::seed(t, 0).describe();
  check_positive_definite(values(h), where);
  const DiffTensor hinv = invert_symmetric(h, where);
  return christoffel_form(values(hinv), gradient(h, index_range(0, space.p), kGreekDown));
}

AdaptedDerivatives adapted_jet_derivatives(const ScalarField& f, const Space& space, const JetPoint& jp) {
  const Geometry g = geometry(space, jp);
  const DiffScalar s = f(g.jet);
  return {g.dT(s), g.dX(s), g.dF(s)};
}

CartanGamma cartan_gamma(const Space& space, const JetPoint& jp) {
  const Geometry g = geometry(space, jp);
  const int n = g.n, p = g.p;
  RealTensor C({n, n, p, n}, {kLatinUp, kLatinDown, kGreekUp, kLatinDown});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int c = 0; c < p; ++c) {
        for (int k = 0; k < n; ++k) C(i, j, c, k) = g.C[static_cast<std::size_t>(c)](i, j, k);
      }
    }
  }
  return {g.kappa, g.G, g.L, C};
}

RealTensor jet_covariant_derivative(const TensorField& t, const Space& space, const JetPoint& jp,
                                    DerivativeKind kind) {
  if (!t) throw Error("tensor field is not set");
  const Geometry g = geometry(space, jp);
  const DiffTensor v = t(g.jet);
  for (int s = 0; s < v.rank(); ++s) {
    const int want = v.slot(s).kind == IndexKind::Latin ? g.n : g.p;
    if (v.extent(s) != want) throw ShapeError("d-tensor extent does not match its index kind");
  }
  switch (kind) {
    case DerivativeKind::TemporalHorizontal: return g.hT(v);
    case DerivativeKind::SpatialHorizontal: return g.hM(v);
    case DerivativeKind::Vertical: return g.v(v);
  }
  throw Error("unknown derivative kind");
}

Velocity multitime_velocity(const Space& space, const JetPoint& jp) {
  const Geometry g = geometry(space, jp);
  const Fluid f = fluid(g, nullptr);
  return {f.eps.value(), values(f.u_up), values(f.u_down)};
}

const std::vector<std::string>& invariant_names() {
  static const std::vector<std::string> names{
      "unit_norm",
      "stress_mixed_form",
      "energy_mixed_form",
      "energy_mixed_identity",
      "hT_temporal_compat",
      "hT_inverse_temporal_compat",
      "h_temporal_compat",
      "h_inverse_temporal_compat",
      "v_temporal_compat",
      "v_inverse_temporal_compat",
      "hT_metric_compat",
      "hT_inverse_metric_compat",
      "h_metric_compat",
      "h_inverse_metric_compat",
      "v_metric_compat",
      "v_inverse_metric_compat",
      "h_normalization_u_du",
      "h_normalization_du_u",
      "v_normalization_u_du",
      "v_normalization_du_u",
      "h_contraction_identity",
      "v_contraction_identity",
      "h_conservation_paths",
      "v_conservation_paths"};
  return names;
}

ResidualReport residuals(const FluidState& state, const Space& space, const JetPoint& jp, VerticalIndex vertical) {
  const Geometry g = geometry(space, jp);
  const int n = g.n, p = g.p;
  const Fluid f = fluid(g, &state);
  const Electromagnetic e = electromagnetic(g, state.em);
  const Stress s = stress(g, f, e);
  const Forces F = forces(g, e);
  const RealTensor gv = values(g.g), ginv = values(g.ginv), hinv = values(g.hinv);
  const RealTensor u = values(f.u_up), ul = values(f.u_down);
  const double w = f.w.value();

  DiffTensor wu({n, p}, {kLatinUp, kGreekDown});
  for (int m = 0; m < n; ++m) {
    for (int a = 0; a < p; ++a) wu(m, a) = f.w * f.u_up(m, a);
  }

  ResidualReport r;

  // h_M channel
  {
    const RealTensor dwu = trace(g.hM(wu), 0, 2);  // [a]
    const RealTensor du_low = g.hM(f.u_down);      // [i, b, m]
    const RealTensor du_up = g.hM(f.u_up);
    const RealTensor dp = g.dX(f.p);
    const RealTensor force_low = raise_lower(F.force_h, 0, gv);
    RealTensor X({n}, {kLatinDown});
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) {
          double inner = dwu(a) * ul(i, b);
          for (int m = 0; m < n; ++m) inner += w * u(m, a) * du_low(i, b, m);
          acc += hinv(a, b) * inner;
        }
      }
      X(i) = acc;
    }
    RealTensor cons({n}, {kLatinDown});
    for (int i = 0; i < n; ++i) cons(i) = X(i) + dp(i) - force_low(i);
    RealTensor cont({p}, {kGreekDown}), lorentz({p}, {kGreekDown});
    for (int mu = 0; mu < p; ++mu) {
      for (int i = 0; i < n; ++i) {
        cont(mu) += (X(i) + dp(i)) * u(i, mu);
        lorentz(mu) += F.div_h(i) * u(i, mu);
      }
    }
    const RealTensor direct = trace(g.hM(s.mixed), 0, 2);
    r.add("h_conservation", cons);
    r.add("h_conservation_direct", direct);
    r.add("h_continuity", cont);
    r.add("h_lorentz_condition", lorentz);
    r.add("h_lorentz_force", F.force_h);

    RealTensor contraction({p}, {kGreekDown});
    for (int mu = 0; mu < p; ++mu) {
      double acc = -cont(mu) - lorentz(mu);
      for (int i = 0; i < n; ++i) acc += cons(i) * u(i, mu);
      contraction(mu) = acc;
    }
    RealTensor u_du({n}, {kLatinDown}), du_u({n}, {kLatinDown});
    for (int m = 0; m < n; ++m) {
      for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) {
          for (int i = 0; i < n; ++i) {
            u_du(m) += hinv(a, b) * ul(i, a) * du_up(i, b, m);
            du_u(m) += hinv(a, b) * du_low(i, b, m) * u(i, a);
          }
        }
      }
    }
    r.add("h_normalization_u_du", u_du);
    r.add("h_normalization_du_u", du_u);
    r.add("h_contraction_identity", contraction);
    r.add("h_conservation_paths", axpy(cons, -1.0, direct));
  }

  // v channel
  {
    const RealTensor dwu = trace(g.v(wu), 0, 3);  // [a, mu]
    const RealTensor du_low = g.v(f.u_down);      // [i, b, mu, m]
    const RealTensor du_up = g.v(f.u_up);
    const RealTensor dp = g.dF(f.p);  // [m, mu]
    RealTensor cons({n, p}, {kLatinDown, kGreekUp});
    double cont = 0.0, lorentz = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int mu = 0; mu < p; ++mu) {
        double x = 0.0;
        for (int a = 0; a < p; ++a) {
          for (int b = 0; b < p; ++b) {
            double inner = dwu(a, mu) * ul(i, b);
            for (int m = 0; m < n; ++m) inner += w * u(m, a) * du_low(i, b, mu, m);
            x += hinv(a, b) * inner;
          }
        }
        double fl = 0.0;
        for (int q = 0; q < n; ++q) fl += gv(i, q) * F.force_v(q, mu);
        cons(i, mu) = x + dp(i, mu) - fl;
        cont += (x + dp(i, mu)) * u(i, mu);
        lorentz += F.div_v(i, mu) * u(i, mu);
      }
    }
    const RealTensor direct = trace(g.v(s.mixed), 0, 3);  // [i, mu]
    double contraction = -cont - lorentz;
    for (int i = 0; i < n; ++i) {
      for (int mu = 0; mu < p; ++mu) contraction += cons(i, mu) * u(i, mu);
    }
    auto reading = [&](const RealTensor& t) {
      if (vertical == VerticalIndex::FreeMu) return t;
      RealTensor out({n}, {kLatinDown});
      for (int i = 0; i < n; ++i) {
        for (int mu = 0; mu < p; ++mu) out(i) += t(i, mu);
      }
      return out;
    };
    r.add("v_conservation", reading(cons));
    r.add("v_conservation_direct", reading(direct));
    r.add("v_continuity", cont);
    r.add("v_lorentz_condition", lorentz);
    r.add("v_lorentz_force", F.force_v);

    RealTensor u_du({p, n}, {kGreekUp, kLatinDown}), du_u({p, n}, {kGreekUp, kLatinDown});
    for (int mu = 0; mu < p; ++mu) {
      for (int m = 0; m < n; ++m) {
        for (int a = 0; a < p; ++a) {
          for (int b = 0; b < p; ++b) {
            for (int i = 0; i < n; ++i) {
              u_du(mu, m) += hinv(a, b) * ul(i, a) * du_up(i, b, mu, m);
              du_u(mu, m) += hinv(a, b) * du_low(i, b, mu, m) * u(i, a);
            }
          }
        }
      }
    }
    r.add("v_normalization_u_du", u_du);
    r.add("v_normalization_du_u", du_u);
    r.add("v_contraction_identity", contraction);
    r.add("v_conservation_paths", axpy(cons, -1.0, direct));
  }

  r.add("stress", values(s.lower));
  r.add("stress_mixed", values(s.mixed));
  r.add("energy", values(e.energy.lower));
  r.add("energy_mixed", values(e.energy.mixed));

  double norm = -1.0;
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) {
      for (int i = 0; i < n; ++i) norm += hinv(a, b) * ul(i, a) * u(i, b);
    }
  }
  r.add("unit_norm", norm);
  r.add("stress_mixed_form", axpy(values(s.mixed), -1.0, raise_lower(values(s.lower), 0, ginv)));
  r.add("energy_mixed_form", axpy(values(e.energy.mixed), -1.0, raise_lower(values(e.energy.lower), 0, ginv)));
  r.add("energy_mixed_identity", axpy(values(e.energy.mixed), -1.0, values(e.mixed_direct)));
  r.add("hT_temporal_compat", g.hT(g.h));
  r.add("hT_inverse_temporal_compat", g.hT(g.hinv));
  r.add("h_temporal_compat", g.hM(g.h));
  r.add("h_inverse_temporal_compat", g.hM(g.hinv));
  r.add("v_temporal_compat", g.v(g.h));
  r.add("v_inverse_temporal_compat", g.v(g.hinv));
  r.add("hT_metric_compat", g.hT(g.g));
  r.add("hT_inverse_metric_compat", g.hT(g.ginv));
  r.add("h_metric_compat", g.hM(g.g));
  r.add("h_inverse_metric_compat", g.hM(g.ginv));
  r.add("v_metric_compat", g.v(g.g));
  r.add("v_inverse_metric_compat", g.v(g.ginv));
  return r;
}

std::vector<std::vector<double>> stress_block_table(const FluidState& state, const Space& space, const JetPoint& jp) {
  const Geometry g = geometry(space, jp);
  const int n = g.n, p = g.p;
  const Fluid f = fluid(g, &state);
  const Stress s = stress(g, f, electromagnetic(g, state.em));
  const RealTensor T = values(s.lower), hinv = values(g.hinv);
  const int D = p + n + n * p;
  std::vector<std::vector<double>> out(static_cast<std::size_t>(D), std::vector<double>(static_cast<std::size_t>(D), 0.0));
  auto at = [&](int a, int b) -> double& { return out[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]; };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      at(p + i, p + j) = T(i, j);
      for (int eta = 0; eta < p; ++eta) {
        for (int nu = 0; nu < p; ++nu) at(p + n + i * p + eta, p + n + j * p + nu) = hinv(eta, nu) * T(i, j);
      }
    }
  }
  return out;
}

namespace {

SheetCoefficients sheet_coefficients(const Geometry& g, const FluidState& state, Fluid& f) {
  const int n = g.n, p = g.p;
  f = fluid(g, &state);
  if (inertial_factor_singular(f.p.value(), f.rho.value(), state.c)) {
    throw SingularDynamicsError("p + rho c^2 vanishes at (t, x, x_a)=" + g.jet.describe());
  }
  const Forces F = forces(g, electromagnetic(g, state.em));
  const RealTensor ginv = values(g.ginv);
  SheetCoefficients c;
  c.w = f.w.value();
  c.eps0 = f.eps.value();
  const DiffScalar inv = 1.0 / f.eps;
  const DiffScalar we = f.w * inv;
  const RealTensor dwe = g.dX(we), dinv = g.dX(inv);
  const RealTensor vwe = g.dF(we), vinv = g.dF(inv);
  c.H = axpy(dwe, c.w, dinv);
  c.V = axpy(vwe, c.w, vinv);
  const RealTensor dp = g.dX(f.p);
  const RealTensor dpv = g.dF(f.p);
  c.rhs_h = RealTensor({n}, {kLatinUp});
  c.rhs_v = RealTensor({n, p}, {kLatinUp, kGreekUp});
  for (int k = 0; k < n; ++k) {
    double rh = F.force_h(k);
    for (int m = 0; m < n; ++m) rh -= ginv(k, m) * dp(m);
    c.rhs_h(k) = c.eps0 * rh;
    for (int mu = 0; mu < p; ++mu) {
      double rv = F.force_v(k, mu);
      for (int m = 0; m < n; ++m) rv -= ginv(k, m) * dpv(m, mu);
      c.rhs_v(k, mu) = c.eps0 * rv;
    }
  }
  return c;
}

}  // namespace

SheetCoefficients stream_sheet_coefficients(const FluidState& state, const Space& space, const JetPoint& jp) {
  const Geometry g = geometry(space, jp);
  Fluid f;
  return sheet_coefficients(g, state, f);
}

SheetResidual stream_sheet_residuals(const FluidState& state, const Space& space, const JetPoint& jp, SheetForm form) {
  const Geometry g = geometry(space, jp);
  const int n = g.n, p = g.p;
  Fluid f;
  const SheetCoefficients co = sheet_coefficients(g, state, f);
  const RealTensor hinv = values(g.hinv);
  const double w = co.w;
  const double e0 = co.eps0;
  auto x = [&](int i, int a) { return g.x(i, a); };

  SheetResidual out{co.rhs_h, co.rhs_v};
  for (double& v : out.horizontal.data()) v = -v;
  for (double& v : out.vertical.data()) v = -v;

  if (form == SheetForm::Reduced) {
    const double c = w / e0;
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) {
          double inner = 0.0;
          double trace_a = 0.0;  // L^m_rm x^r_a - N^(m)_(a)m
          for (int m = 0; m < n; ++m) {
            inner += co.H(m) * x(m, a) * x(k, b);
            double lk = -g.N(k, b, m);
            for (int r = 0; r < n; ++r) lk += g.L(k, r, m) * x(r, b);
            inner += c * lk * x(m, a);
            trace_a -= g.N(m, a, m);
            for (int r = 0; r < n; ++r) trace_a += g.L(m, r, m) * x(r, a);
          }
          inner += c * trace_a * x(k, b);
          acc += hinv(a, b) * inner;
        }
      }
      out.horizontal(k) += acc;
      for (int mu = 0; mu < p; ++mu) {
        const RealTensor& Cm = g.C[static_cast<std::size_t>(mu)];
        double vacc = 0.0;
        for (int a = 0; a < p; ++a) {
          for (int b = 0; b < p; ++b) {
            double inner = 0.0;
            for (int m = 0; m < n; ++m) inner += co.V(m, mu) * x(m, a) * x(k, b);
            inner += c * ((a == mu ? n * x(k, b) : 0.0) + (b == mu ? x(k, a) : 0.0));
            for (int r = 0; r < n; ++r) {
              double cc = 0.0;
              for (int m = 0; m < n; ++m) cc += Cm(k, m, r) * x(m, b) + Cm(m, r, m) * x(k, b);
              inner += c * cc * x(r, a);
            }
            vacc += hinv(a, b) * inner;
          }
        }
        out.vertical(k, mu) += vacc;
      }
    }
    return out;
  }

  // Covariant form: A^m_a = w x^m_a / eps0, B^k_b = x^k_b / eps0.
  DiffTensor A({n, p}, {kLatinUp, kGreekDown}), B({n, p}, {kLatinUp, kGreekDown});
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < p; ++a) {
      B(i, a) = g.jet.var(g.fiber(i, a)) / f.eps;
      A(i, a) = f.w * B(i, a);
    }
  }
  const RealTensor dA = trace(g.hM(A), 0, 2);   // [a]
  const RealTensor dB = g.hM(B);                // [k, b, m]
  const RealTensor vA = trace(g.v(A), 0, 3);    // [a, mu]
  const RealTensor vB = g.v(B);                 // [k, b, mu, m]
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int a = 0; a < p; ++a) {
      for (int b = 0; b < p; ++b) {
        double inner = dA(a) * x(k, b);
        for (int m = 0; m < n; ++m) inner += w * x(m, a) * dB(k, b, m);
        acc += hinv(a, b) * inner;
      }
    }
    out.horizontal(k) += acc;
    for (int mu = 0; mu < p; ++mu) {
      double vacc = 0.0;
      for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) {
          double inner = vA(a, mu) * x(k, b);
          for (int m = 0; m < n; ++m) inner += w * x(m, a) * vB(k, b, mu, m);
          vacc += hinv(a, b) * inner;
        }
      }
      out.vertical(k, mu) += vacc;
    }
  }
  return out;
}

std::size_t StreamSheet::node_count() const {
  std::size_t c = 1;
  for (int k : nodes) c *= static_cast<std::size_t>(k);
  return c;
}

std::vector<int> StreamSheet::unravel(std::size_t node) const {
  std::vector<int> idx(nodes.size());
  for (std::size_t a = nodes.size(); a-- > 0;) {
    idx[a] = static_cast<int>(node % static_cast<std::size_t>(nodes[a]));
    node /= static_cast<std::size_t>(nodes[a]);
  }
  return idx;
}

std::size_t StreamSheet::ravel(std::span<const int> index) const {
  std::size_t flat = 0;
  for (std::size_t a = 0; a < nodes.size(); ++a) flat = flat * static_cast<std::size_t>(nodes[a]) + static_cast<std::size_t>(index[a]);
  return flat;
}

std::vector<double> StreamSheet::time(std::size_t node) const {
  const auto idx = unravel(node);
  std::vector<double> t(nodes.size());
  for (std::size_t a = 0; a < nodes.size(); ++a) t[a] = origin[a] + idx[a] * spacing[a];
  return t;
}

bool StreamSheet::interior(std::size_t node) const {
  const auto idx = unravel(node);
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    if (idx[a] == 0 || idx[a] == nodes[a] - 1) return false;
  }
  return true;
}

std::vector<JetPoint> prolong_sheet(const StreamSheet& sheet, const Space& space) {
  const int p = sheet.p();
  if (p != space.p) throw ShapeError("sheet has " + std::to_string(p) + " time axes, space has p = " + std::to_string(space.p));
  if (p < 1 || p > 2) throw ShapeError("stream sheets support p = 1 or 2");
  if (sheet.n != space.n) throw ShapeError("sheet dimension does not match n");
  if (sheet.origin.size() != sheet.nodes.size() || sheet.spacing.size() != sheet.nodes.size()) {
    throw ShapeError("sheet origin and spacing must have one entry per axis");
  }
  for (int a = 0; a < p; ++a) {
    if (sheet.nodes[static_cast<std::size_t>(a)] < 3) {
      throw ShapeError("stream sheet needs at least 3 nodes per axis, axis " + std::to_string(a + 1) + " has " +
                       std::to_string(sheet.nodes[static_cast<std::size_t>(a)]));
    }
    if (!(sheet.spacing[static_cast<std::size_t>(a)] > 0.0)) throw ShapeError("grid spacing must be positive");
  }
  if (sheet.values.size() != sheet.node_count()) throw ShapeError("sheet value count does not match the grid");
  for (const auto& v : sheet.values) {
    if (static_cast<int>(v.size()) != sheet.n) throw ShapeError("sheet node value has the wrong dimension");
  }
  const int n = sheet.n;
  std::vector<JetPoint> out;
  out.reserve(sheet.node_count());
  for (std::size_t node = 0; node < sheet.node_count(); ++node) {
    JetPoint jp{sheet.time(node), sheet.values[node], std::vector<double>(static_cast<std::size_t>(n * p), 0.0)};
    const auto idx = sheet.unravel(node);
    for (int a = 0; a < p; ++a) {
      const std::size_t ax = static_cast<std::size_t>(a);
      const double h = sheet.spacing[ax];
      const int last = sheet.nodes[ax] - 1;
      auto at = [&](int offset) {
        auto j = idx;
        j[ax] += offset;
        return &sheet.values[sheet.ravel(j)];
      };
      for (int i = 0; i < n; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        double d;
        if (idx[ax] == 0) {
          d = (-3.0 * (*at(0))[ii] + 4.0 * (*at(1))[ii] - (*at(2))[ii]) / (2.0 * h);
        } else if (idx[ax] == last) {
          d = (3.0 * (*at(0))[ii] - 4.0 * (*at(-1))[ii] + (*at(-2))[ii]) / (2.0 * h);
        } else {
          d = ((*at(1))[ii] - (*at(-1))[ii]) / (2.0 * h);
        }
        jp.xdot[static_cast<std::size_t>(i * p + a)] = d;
      }
    }
    out.push_back(std::move(jp));
  }
  return out;
}

}  // namespace jetplasma::multitime
