#pragma once

// Fields are evaluated as jets: every coordinate of the point is seeded as an
// independent Taylor variable of a common order, and a field returns its
// Taylor polynomial of that order.  Derived fields (Finsler metrics, canonical
// connections) re-seed the same point at a higher order internally.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "jetplasma/diff_scalar.hpp"
#include "jetplasma/expr.hpp"
#include "jetplasma/tensor.hpp"

namespace jetplasma {

class Jet {
 public:
  static Jet seed(std::span<const double> point, int order);

  Jet with_order(int order) const { return seed(point_, order); }
  int order() const noexcept { return order_; }
  int size() const noexcept { return static_cast<int>(point_.size()); }
  const std::vector<double>& point() const noexcept { return point_; }
  const DiffScalar& var(int i) const { return vars_.at(static_cast<std::size_t>(i)); }
  std::span<const DiffScalar> vars() const noexcept { return vars_; }
  DiffScalar constant(double v) const { return DiffScalar::constant(v, size(), order_); }

  std::string describe() const;

 private:
  std::vector<double> point_;
  int order_ = 0;
  std::vector<DiffScalar> vars_;
};

// Coordinate names of each framework, in seed order.
std::vector<std::string> riemann_coordinates(int n);
std::vector<std::string> lagrange_coordinates(int n);
std::vector<std::string> multitime_coordinates(int n, int p);
inline int jet_fiber_index(int n, int p, int i, int alpha) { return p + n + i * p + alpha; }

class ScalarField {
 public:
  using Function = std::function<DiffScalar(const Jet&)>;

  ScalarField();
  static ScalarField constant(double v);
  // Throws UnboundVariableError if the expression uses a name outside `coordinates`.
  static ScalarField expression(const expr::Expression& e, const std::vector<std::string>& coordinates);
  static ScalarField expression(std::string_view source, const std::vector<std::string>& coordinates);
  static ScalarField function(Function f, std::string label = "<function>");

  DiffScalar operator()(const Jet& jet) const;
  double value(std::span<const double> point) const;

  bool is_constant() const noexcept { return constant_; }
  double constant_value() const noexcept { return constant_value_; }
  const std::string& label() const noexcept { return label_; }

 private:
  Function fn_;
  std::string label_;
  bool constant_ = false;
  double constant_value_ = 0.0;
};

class TensorField {
 public:
  using Function = std::function<DiffTensor(const Jet&)>;

  TensorField() = default;
  TensorField(std::vector<int> extents, std::vector<Slot> slots, Function f);

  // Components in row-major order.
  static TensorField components(std::vector<int> extents, std::vector<Slot> slots, std::vector<ScalarField> c);
  // Upper triangle (including diagonal) listed row by row.
  static TensorField symmetric(int n, Slot slot, std::vector<ScalarField> upper);
  // Strict upper triangle listed row by row; the diagonal is zero.
  static TensorField antisymmetric(int n, Slot slot, std::vector<ScalarField> strict_upper);
  static TensorField zero(std::vector<int> extents, std::vector<Slot> slots);

  DiffTensor operator()(const Jet& jet) const;
  RealTensor value(std::span<const double> point) const;

  const std::vector<int>& extents() const noexcept { return extents_; }
  const std::vector<Slot>& slots() const noexcept { return slots_; }
  explicit operator bool() const noexcept { return static_cast<bool>(fn_); }

 private:
  std::vector<int> extents_;
  std::vector<Slot> slots_;
  Function fn_;
};

/// Symmetric metric field with informational signature.
struct MetricField {
  TensorField g;
  std::vector<int> signature;  // informational only

  static MetricField from_upper(int n, Slot slot, std::vector<ScalarField> upper, std::vector<int> signature = {});
  static MetricField identity(int n, Slot slot);
  int dim() const { return g.extents().at(0); }
};

/// Value and all partials up to `order` of a field at a point, with respect
/// to the coordinates listed in `seeds` (other coordinates held fixed).
/// first[a], second[a][b], third[a][b][c] index into `seeds`.
struct FieldJet {
  double value = 0.0;
  std::vector<double> first;
  std::vector<std::vector<double>> second;
  std::vector<std::vector<std::vector<double>>> third;
};
FieldJet field_jet(const ScalarField& f, std::span<const double> point, std::span<const int> seeds, int order);

struct TensorFieldJet {
  RealTensor value;
  std::vector<RealTensor> first;
  std::vector<std::vector<RealTensor>> second;
};
TensorFieldJet field_jet(const TensorField& f, std::span<const double> point, std::span<const int> seeds, int order);

}  // namespace jetplasma
