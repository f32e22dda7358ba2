#include "jetplasma/models.hpp"

#include <algorithm>
#include <cmath>

#include "jetplasma/covariant.hpp"
#include "jetplasma/errors.hpp"

namespace jetplasma::models {

namespace {

void check_jet(const Jet& jet, int n, int p) {
  if (jet.size() != p + n + n * p) throw ShapeError("field needs a multi-time jet with p = " + std::to_string(p) + ", n = " + std::to_string(n));
}

// Christoffel symbols [i, j, k] of a metric over the seed block [first, first + dim).
DiffTensor christoffel_block(const DiffTensor& g, int first, int dim, const std::string& where) {
  const DiffTensor ginv = invert_symmetric(g, where);
  std::vector<DiffTensor> dg;  // dg[c](a, b) = d g_ab / d(first + c)
  for (int c = 0; c < dim; ++c) dg.push_back(partial_field(g, first + c));
  auto slots = g.slots();
  DiffTensor out({dim, dim, dim}, {Slot{slots[0].kind, Variance::Up}, slots[0], slots[0]});
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      for (int k = 0; k < dim; ++k) {
        DiffScalar acc(0.0);
        for (int q = 0; q < dim; ++q) {
          acc += ginv(i, q) * (dg[static_cast<std::size_t>(k)](j, q) + dg[static_cast<std::size_t>(j)](k, q) -
                               dg[static_cast<std::size_t>(q)](j, k));
        }
        out(i, j, k) = 0.5 * acc;
      }
    }
  }
  return out;
}

TensorField tensor_metric(int n, TensorField::Function fn) {
  return TensorField({n, n}, {kLatinDown, kLatinDown}, std::move(fn));
}

RealTensor inverse_value(const MetricField& m, std::span<const double> coords) {
  return invert_symmetric(m.g.value(coords));
}

}  // namespace

CanonicalConnection canonical_connection(const MetricField& h, const MetricField& phi, int n, int p) {
  CanonicalConnection c;
  c.N = TensorField({n, p, n}, {kLatinUp, kGreekDown, kLatinDown}, [phi, n, p](const Jet& jet) {
    check_jet(jet, n, p);
    const int k = jet.order();
    const DiffTensor gamma = christoffel_block(phi.g(jet.with_order(k + 1)), p, n, "x=" + jet.describe());
    DiffTensor N({n, p, n}, {kLatinUp, kGreekDown, kLatinDown});
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < p; ++a) {
        for (int j = 0; j < n; ++j) {
          DiffScalar acc(0.0);
          for (int m = 0; m < n; ++m) acc += gamma(i, j, m) * jet.var(jet_fiber_index(n, p, m, a));
          N(i, a, j) = acc.truncated(k);
        }
      }
    }
    return N;
  });
  c.M = TensorField({n, p, p}, {kLatinUp, kGreekDown, kGreekDown}, [h, n, p](const Jet& jet) {
    check_jet(jet, n, p);
    const int k = jet.order();
    const DiffTensor kappa = christoffel_block(h.g(jet.with_order(k + 1)), 0, p, "t=" + jet.describe());
    DiffTensor M({n, p, p}, {kLatinUp, kGreekDown, kGreekDown});
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) {
          DiffScalar acc(0.0);
          for (int m = 0; m < p; ++m) acc -= kappa(m, a, b) * jet.var(jet_fiber_index(n, p, i, m));
          M(i, a, b) = acc.truncated(k);
        }
      }
    }
    return M;
  });
  return c;
}

multitime::Space build_bsml(const MetricField& h, const MetricField& phi, int n, int p) {
  return {p, n, h, phi, canonical_connection(h, phi, n, p).N};
}

multitime::Space build_grgml(const MetricField& h, const ScalarField& sigma, const MetricField& phi, int n, int p) {
  MetricField g{tensor_metric(n,
                              [phi, sigma](const Jet& jet) {
                                DiffTensor out = phi.g(jet);
                                const DiffScalar f = exp(2.0 * sigma(jet));
                                for (auto& v : out.data()) v = f * v;
                                return out;
                              }),
                phi.signature};
  return {p, n, h, g, canonical_connection(h, phi, n, p).N};
}

namespace {

struct RgogmlParts {
  DiffTensor phi;
  DiffScalar coef;              // 1 - 1/refractive_index
  std::vector<DiffScalar> z;    // z^m = x^m_mu X^mu
  double ratio = 0.0;           // 1 + coef z.phi.z
};

RgogmlParts rgogml_parts(const MetricField& phi, const ScalarField& refractive_index, const std::vector<ScalarField>& X,
                         int n, int p, const Jet& jet) {
  check_jet(jet, n, p);
  if (static_cast<int>(X.size()) != p) throw ShapeError("RGOGML needs p components of X");
  RgogmlParts r;
  r.phi = phi.g(jet);
  const DiffScalar ni = refractive_index(jet);
  if (ni.value() == 0.0) throw DomainError("division by zero", "1/refractive_index", jet.describe());
  r.coef = 1.0 - 1.0 / ni;
  r.z.assign(static_cast<std::size_t>(n), DiffScalar(0.0));
  for (int mu = 0; mu < p; ++mu) {
    const DiffScalar Xm = X[static_cast<std::size_t>(mu)](jet);
    for (int m = 0; m < n; ++m) r.z[static_cast<std::size_t>(m)] += jet.var(jet_fiber_index(n, p, m, mu)) * Xm;
  }
  double q = 0.0;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) q += r.phi(a, b).value() * r.z[static_cast<std::size_t>(a)].value() * r.z[static_cast<std::size_t>(b)].value();
  }
  r.ratio = 1.0 + r.coef.value() * q;
  return r;
}

}  // namespace

double rgogml_determinant_ratio(const MetricField& phi, const ScalarField& refractive_index,
                                const std::vector<ScalarField>& X, int n, int p, std::span<const double> coords) {
  return rgogml_parts(phi, refractive_index, X, n, p, Jet::seed(coords, 0)).ratio;
}

multitime::Space build_rgogml(const MetricField& h, const MetricField& phi, const ScalarField& refractive_index,
                              const std::vector<ScalarField>& X, int n, int p) {
  MetricField g{tensor_metric(n,
                              [=](const Jet& jet) {
                                const RgogmlParts r = rgogml_parts(phi, refractive_index, X, n, p, jet);
                                if (!(std::abs(r.ratio) > 1e-12)) {
                                  throw DegenerateMetricError("RGOGML metric is singular (det g / det phi = " +
                                                              std::to_string(r.ratio) + ") at " + jet.describe());
                                }
                                std::vector<DiffScalar> Y(static_cast<std::size_t>(n), DiffScalar(0.0));
                                for (int i = 0; i < n; ++i) {
                                  for (int m = 0; m < n; ++m) Y[static_cast<std::size_t>(i)] += r.phi(i, m) * r.z[static_cast<std::size_t>(m)];
                                }
                                DiffTensor out = r.phi;
                                for (int i = 0; i < n; ++i) {
                                  for (int j = i; j < n; ++j) {
                                    out(i, j) = r.phi(i, j) + r.coef * Y[static_cast<std::size_t>(i)] * Y[static_cast<std::size_t>(j)];
                                    out(j, i) = out(i, j);
                                  }
                                }
                                return out;
                              }),
                {}};
  return {p, n, h, g, canonical_connection(h, phi, n, p).N};
}

multitime::Space build_edml(const MetricField& h, const MetricField& phi, const std::vector<ScalarField>& U, int n,
                            int p) {
  if (static_cast<int>(U.size()) != n * p) throw ShapeError("EDML needs n * p components of U");
  const TensorField base = canonical_connection(h, phi, n, p).N;
  TensorField N({n, p, n}, {kLatinUp, kGreekDown, kLatinDown}, [=](const Jet& jet) {
    DiffTensor out = base(jet);
    const int k = jet.order();
    const Jet up = jet.with_order(k + 1);
    const DiffTensor hv = h.g(up);
    const DiffTensor phiinv = invert_symmetric(phi.g(up), "x=" + jet.describe());
    // dU[j](m, mu) = d U^{(mu)}_{(m)} / dx^j
    std::vector<std::vector<DiffScalar>> dU(static_cast<std::size_t>(n));
    std::vector<DiffScalar> Uv;
    for (const auto& u : U) Uv.push_back(u(up));
    for (int j = 0; j < n; ++j) {
      for (const auto& u : Uv) dU[static_cast<std::size_t>(j)].push_back(u.partial(p + j));
    }
    auto d = [&](int j, int m, int mu) { return dU[static_cast<std::size_t>(j)][static_cast<std::size_t>(m * p + mu)]; };
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < p; ++a) {
        for (int j = 0; j < n; ++j) {
          DiffScalar acc(0.0);
          for (int mu = 0; mu < p; ++mu) {
            for (int m = 0; m < n; ++m) acc += hv(a, mu) * phiinv(i, m) * (d(j, m, mu) - d(m, j, mu));
          }
          out(i, a, j) = out(i, a, j) + (0.25 * acc).truncated(k);
        }
      }
    }
    return out;
  });
  return {p, n, h, phi, N};
}

ScalarField edml_lagrangian(const MetricField& h, const MetricField& phi, const std::vector<ScalarField>& U,
                            const ScalarField& Phi, int n, int p) {
  if (!U.empty() && static_cast<int>(U.size()) != n * p) throw ShapeError("EDML needs n * p components of U");
  return ScalarField::function(
      [=](const Jet& jet) {
        check_jet(jet, n, p);
        const DiffTensor hinv = invert_symmetric(h.g(jet), "t=" + jet.describe());
        const DiffTensor g = phi.g(jet);
        auto x = [&](int i, int a) { return jet.var(jet_fiber_index(n, p, i, a)); };
        DiffScalar L = Phi(jet);
        for (int a = 0; a < p; ++a) {
          for (int b = 0; b < p; ++b) {
            for (int i = 0; i < n; ++i) {
              for (int j = 0; j < n; ++j) L += hinv(a, b) * g(i, j) * x(i, a) * x(j, b);
            }
          }
        }
        for (int i = 0; i < n && !U.empty(); ++i) {
          for (int a = 0; a < p; ++a) L += U[static_cast<std::size_t>(i * p + a)](jet) * x(i, a);
        }
        return L;
      },
      "L_ED");
}

multitime::SheetResidual bsml_stream_sheet_residuals(const multitime::FluidState& state, const multitime::Space& space,
                                                     const multitime::JetPoint& jp) {
  const auto co = multitime::stream_sheet_coefficients(state, space, jp);
  const int n = space.n, p = space.p;
  const RealTensor hinv = inverse_value(space.h, jp.coordinates());
  auto x = [&](int i, int a) { return jp.xdot[static_cast<std::size_t>(i * p + a)]; };
  const double c = co.w / co.eps0;
  multitime::SheetResidual r{co.rhs_h, co.rhs_v};
  for (double& v : r.horizontal.data()) v = -v;
  for (double& v : r.vertical.data()) v = -v;
  for (int k = 0; k < n; ++k) {
    for (int a = 0; a < p; ++a) {
      for (int b = 0; b < p; ++b) {
        for (int m = 0; m < n; ++m) r.horizontal(k) += hinv(a, b) * co.H(m) * x(m, a) * x(k, b);
      }
    }
    for (int mu = 0; mu < p; ++mu) {
      double acc = 0.0;
      for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) {
          double inner = c * ((a == mu ? n * x(k, b) : 0.0) + (b == mu ? x(k, a) : 0.0));
          for (int m = 0; m < n; ++m) inner += co.V(m, mu) * x(m, a) * x(k, b);
          acc += hinv(a, b) * inner;
        }
      }
      r.vertical(k, mu) += acc;
    }
  }
  return r;
}

Degeneracy bsml_degeneracy(const multitime::Space& space, const multitime::JetPoint& jp) {
  const auto cg = multitime::cartan_gamma(space, jp);
  const auto coords = jp.coordinates();
  const DiffTensor g = space.g.g(Jet::seed(coords, 1));
  const RealTensor gamma = christoffel_form(values(invert_symmetric(g)), gradient(g, index_range(space.p, space.n), kLatinDown));
  return {max_abs(cg.G), max_abs(cg.C), max_abs_diff(cg.L, gamma)};
}

MetricField stock_metric(const std::string& name, int n, const std::vector<std::string>& coordinates,
                         const std::string& sigma) {
  auto f = [&](const std::string& e) { return ScalarField::expression(e, coordinates); };
  std::vector<ScalarField> upper;
  if (name == "flat") return MetricField::identity(n, kLatinDown);
  if (name == "polar") {
    if (n != 2) throw ScenarioError("polar model needs n = 2");
    return MetricField::from_upper(2, kLatinDown, {f("1"), f("0"), f("x1^2")}, {1, 1});
  }
  if (name == "conformal") {
    if (sigma.empty()) throw ScenarioError("conformal model needs sigma");
    const ScalarField s = f(sigma);
    const ScalarField factor = ScalarField::function([s](const Jet& jet) { return exp(2.0 * s(jet)); }, "exp(2*sigma)");
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) upper.push_back(i == j ? factor : ScalarField::constant(0.0));
    }
    return MetricField::from_upper(n, kLatinDown, upper, std::vector<int>(static_cast<std::size_t>(n), 1));
  }
  throw ScenarioError("unknown stock metric '" + name + "'");
}

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"flat", "polar", "conformal", "bsml", "grgml", "rgogml", "edml"};
  return names;
}

std::vector<std::string> required_params(const std::string& name) {
  if (name == "conformal" || name == "grgml") return {"sigma"};
  if (name == "rgogml") return {"refractive_index", "X"};
  if (name == "edml") return {"U"};
  return {};
}

std::vector<std::string> optional_params(const std::string& name) {
  if (name == "bsml" || name == "grgml" || name == "rgogml") return {"phi"};
  if (name == "edml") return {"phi", "Phi"};
  return {};
}

namespace {

void validate(const ModelDescriptor& d, int n, int p) {
  if (std::find(model_names().begin(), model_names().end(), d.name) == model_names().end()) {
    throw ScenarioError("unknown model '" + d.name + "'");
  }
  const auto req = required_params(d.name);
  const auto opt = optional_params(d.name);
  for (const auto& r : req) {
    if (!d.params.count(r)) throw ScenarioError("model " + d.name + " needs parameter '" + r + "'");
  }
  for (const auto& [key, value] : d.params) {
    if (std::find(req.begin(), req.end(), key) == req.end() && std::find(opt.begin(), opt.end(), key) == opt.end()) {
      throw ScenarioError("model " + d.name + " does not take parameter '" + key + "'");
    }
    std::size_t want = 1;
    if (key == "phi") want = static_cast<std::size_t>(n * (n + 1) / 2);
    if (key == "X") want = static_cast<std::size_t>(p);
    if (key == "U") want = static_cast<std::size_t>(n * p);
    if (value.size() != want) {
      throw ScenarioError("model parameter '" + key + "' needs " + std::to_string(want) + " entries, got " +
                          std::to_string(value.size()));
    }
  }
}

}  // namespace

multitime::Space build_model(const ModelDescriptor& d, const MetricField& h, int n, int p) {
  validate(d, n, p);
  const auto coords = multitime_coordinates(n, p);
  auto f = [&](const std::string& e) { return ScalarField::expression(e, coords); };
  auto list = [&](const std::string& key) {
    std::vector<ScalarField> out;
    for (const auto& e : d.params.at(key)) out.push_back(f(e));
    return out;
  };
  auto scalar = [&](const std::string& key) { return f(d.params.at(key).front()); };
  if (d.name == "flat" || d.name == "polar" || d.name == "conformal") {
    const std::string sigma = d.name == "conformal" ? d.params.at("sigma").front() : "";
    return build_bsml(h, stock_metric(d.name, n, coords, sigma), n, p);
  }
  const MetricField phi = d.params.count("phi") ? MetricField::from_upper(n, kLatinDown, list("phi"))
                                                : MetricField::identity(n, kLatinDown);
  if (d.name == "bsml") return build_bsml(h, phi, n, p);
  if (d.name == "grgml") return build_grgml(h, scalar("sigma"), phi, n, p);
  if (d.name == "rgogml") return build_rgogml(h, phi, scalar("refractive_index"), list("X"), n, p);
  return build_edml(h, phi, list("U"), n, p);
}

MetricField build_base_metric(const ModelDescriptor& d, int n, const std::vector<std::string>& coordinates) {
  if (d.name != "flat" && d.name != "polar" && d.name != "conformal") {
    throw ScenarioError("model " + d.name + " needs the multitime framework");
  }
  validate(d, n, 1);
  return stock_metric(d.name, n, coordinates, d.name == "conformal" ? d.params.at("sigma").front() : "");
}

}  // namespace jetplasma::models
