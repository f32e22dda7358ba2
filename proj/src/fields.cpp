#include "jetplasma/fields.hpp"

#include <charconv>

#include "jetplasma/errors.hpp"

namespace jetplasma {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Jet Jet::seed(std::span<const double> point, int order) {
  if (order < 0 || order > kMaxDerivativeOrder) {
    throw Error("derivative order " + std::to_string(order) + " outside [0, 3]");
  }
  if (point.size() > static_cast<std::size_t>(kMaxSeedVariables)) {
    throw Error("too many coordinates for differentiation: " + std::to_string(point.size()));
  }
  Jet j;
  j.point_.assign(point.begin(), point.end());
  j.order_ = order;
  j.vars_ = seed_variables(point, order);
  return j;
}

std::string Jet::describe() const {
  std::string s = "(";
  for (std::size_t i = 0; i < point_.size(); ++i) {
    if (i) s += ", ";
    s += shortest(point_[i]);
  }
  return s + ")";
}

std::vector<std::string> riemann_coordinates(int n) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

std::vector<std::string> lagrange_coordinates(int n) {
  auto names = riemann_coordinates(n);
  for (int i = 1; i <= n; ++i) names.push_back("y" + std::to_string(i));
  return names;
}

std::vector<std::string> multitime_coordinates(int n, int p) {
  std::vector<std::string> names;
  for (int a = 1; a <= p; ++a) names.push_back("t" + std::to_string(a));
  for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  for (int i = 1; i <= n; ++i) {
    for (int a = 1; a <= p; ++a) names.push_back("x" + std::to_string(i) + "_" + std::to_string(a));
  }
  return names;
}

ScalarField::ScalarField() : fn_([](const Jet&) { return DiffScalar(0.0); }), label_("0"), constant_(true) {}

ScalarField ScalarField::constant(double v) {
  ScalarField f;
  f.fn_ = [v](const Jet&) { return DiffScalar(v); };
  f.label_ = shortest(v);
  f.constant_ = true;
  f.constant_value_ = v;
  return f;
}

ScalarField ScalarField::expression(const expr::Expression& e, const std::vector<std::string>& coordinates) {
  if (e.variables().empty()) {
    ScalarField f = constant(e.evaluate({}));
    f.label_ = e.to_string();
    return f;
  }
  auto compiled = std::make_shared<const expr::CompiledExpression>(e, coordinates);
  ScalarField f;
  f.constant_ = false;
  f.label_ = e.to_string();
  f.fn_ = [compiled, coordinates](const Jet& jet) {
    if (jet.size() != static_cast<int>(coordinates.size())) {
      throw ShapeError("field expects " + std::to_string(coordinates.size()) + " coordinates, got " +
                       std::to_string(jet.size()));
    }
    try {
      return compiled->evaluate(jet.vars());
    } catch (const DomainError& err) {
      throw DomainError(err.reason(), err.subexpression(), jet.describe());
    }
  };
  return f;
}

ScalarField ScalarField::expression(std::string_view source, const std::vector<std::string>& coordinates) {
  return expression(expr::Expression::parse(source), coordinates);
}

ScalarField ScalarField::function(Function fn, std::string label) {
  ScalarField f;
  f.constant_ = false;
  f.fn_ = std::move(fn);
  f.label_ = std::move(label);
  return f;
}

DiffScalar ScalarField::operator()(const Jet& jet) const { return fn_(jet); }

double ScalarField::value(std::span<const double> point) const {
  if (constant_) return constant_value_;
  return fn_(Jet::seed(point, 0)).value();
}

TensorField::TensorField(std::vector<int> extents, std::vector<Slot> slots, Function f)
    : extents_(std::move(extents)), slots_(std::move(slots)), fn_(std::move(f)) {
  if (extents_.size() != slots_.size()) throw ShapeError("tensor field slot tags do not match its rank");
}

TensorField TensorField::components(std::vector<int> extents, std::vector<Slot> slots, std::vector<ScalarField> c) {
  std::size_t count = 1;
  for (int e : extents) count *= static_cast<std::size_t>(e);
  if (c.size() != count) {
    throw ShapeError("tensor field needs " + std::to_string(count) + " components, got " + std::to_string(c.size()));
  }
  auto ext = extents;
  auto sl = slots;
  return TensorField(std::move(extents), std::move(slots), [c = std::move(c), ext, sl](const Jet& jet) {
    DiffTensor t(ext, sl);
    for (std::size_t i = 0; i < c.size(); ++i) t.data()[i] = c[i](jet);
    return t;
  });
}

TensorField TensorField::symmetric(int n, Slot slot, std::vector<ScalarField> upper) {
  const std::size_t want = static_cast<std::size_t>(n * (n + 1) / 2);
  if (upper.size() != want) {
    throw ShapeError("symmetric field of dimension " + std::to_string(n) + " needs " + std::to_string(want) +
                     " upper-triangle entries, got " + std::to_string(upper.size()));
  }
  return TensorField({n, n}, {slot, slot}, [n, slot, upper = std::move(upper)](const Jet& jet) {
    DiffTensor t({n, n}, {slot, slot});
    std::size_t k = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const DiffScalar v = upper[k++](jet);
        t(i, j) = v;
        t(j, i) = v;
      }
    }
    return t;
  });
}

TensorField TensorField::antisymmetric(int n, Slot slot, std::vector<ScalarField> strict_upper) {
  const std::size_t want = static_cast<std::size_t>(n * (n - 1) / 2);
  if (strict_upper.size() != want) {
    throw ShapeError("antisymmetric field of dimension " + std::to_string(n) + " needs " + std::to_string(want) +
                     " strict upper-triangle entries, got " + std::to_string(strict_upper.size()));
  }
  return TensorField({n, n}, {slot, slot}, [n, slot, strict_upper = std::move(strict_upper)](const Jet& jet) {
    DiffTensor t({n, n}, {slot, slot});
    std::size_t k = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const DiffScalar v = strict_upper[k++](jet);
        t(i, j) = v;
        t(j, i) = -v;
      }
    }
    return t;
  });
}

TensorField TensorField::zero(std::vector<int> extents, std::vector<Slot> slots) {
  auto ext = extents;
  auto sl = slots;
  return TensorField(std::move(extents), std::move(slots), [ext, sl](const Jet&) { return DiffTensor(ext, sl); });
}

DiffTensor TensorField::operator()(const Jet& jet) const {
  if (!fn_) throw Error("evaluation of an unset tensor field");
  return fn_(jet);
}

RealTensor TensorField::value(std::span<const double> point) const { return values((*this)(Jet::seed(point, 0))); }

MetricField MetricField::from_upper(int n, Slot slot, std::vector<ScalarField> upper, std::vector<int> signature) {
  return MetricField{TensorField::symmetric(n, slot, std::move(upper)), std::move(signature)};
}

MetricField MetricField::identity(int n, Slot slot) {
  std::vector<ScalarField> upper;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) upper.push_back(ScalarField::constant(i == j ? 1.0 : 0.0));
  }
  return from_upper(n, slot, std::move(upper), std::vector<int>(static_cast<std::size_t>(n), 1));
}

FieldJet field_jet(const ScalarField& f, std::span<const double> point, std::span<const int> seeds, int order) {
  if (order < 1 || order > kMaxDerivativeOrder) throw Error("field_jet order must be in [1, 3]");
  const DiffScalar s = f(Jet::seed(point, order));
  const std::size_t k = seeds.size();
  FieldJet out;
  out.value = s.value();
  out.first.resize(k);
  for (std::size_t a = 0; a < k; ++a) out.first[a] = s.d(seeds[a]);
  if (order >= 2) {
    out.second.assign(k, std::vector<double>(k));
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) out.second[a][b] = s.d(seeds[a], seeds[b]);
    }
  }
  if (order >= 3) {
    out.third.assign(k, std::vector<std::vector<double>>(k, std::vector<double>(k)));
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        for (std::size_t c = 0; c < k; ++c) out.third[a][b][c] = s.d(seeds[a], seeds[b], seeds[c]);
      }
    }
  }
  return out;
}

TensorFieldJet field_jet(const TensorField& f, std::span<const double> point, std::span<const int> seeds, int order) {
  if (order < 1 || order > 2) throw Error("tensor field_jet order must be 1 or 2");
  const DiffTensor t = f(Jet::seed(point, order));
  TensorFieldJet out;
  out.value = values(t);
  for (int a : seeds) {
    RealTensor d = out.value;
    for (std::size_t i = 0; i < t.size(); ++i) d.data()[i] = t.data()[i].d(a);
    out.first.push_back(std::move(d));
  }
  if (order >= 2) {
    for (int a : seeds) {
      std::vector<RealTensor> row;
      for (int b : seeds) {
        RealTensor d = out.value;
        for (std::size_t i = 0; i < t.size(); ++i) d.data()[i] = t.data()[i].d(a, b);
        row.push_back(std::move(d));
      }
      out.second.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace jetplasma
