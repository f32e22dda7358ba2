#pragma once

// Forward-mode differentiable scalar: a truncated multivariate Taylor
// polynomial of order <= 3 in a fixed set of seed variables.
//
// A DiffScalar built from `variable(x0, i, nvars, order)` represents x_i near
// x0.  Arithmetic and the elementary functions propagate every mixed partial
// up to the order of the operands.  partial(i) returns the Taylor polynomial
// of the derivative field, one order lower, so first derivatives of derived
// quantities (which themselves contain derivatives of the inputs) stay exact.
//
// The value part of every operation is computed with the same floating-point
// operation as the plain double computation, so value() agrees bit-for-bit
// with evaluating the same composite on doubles.

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace jetplasma {

inline constexpr int kMaxDerivativeOrder = 3;
inline constexpr int kMaxSeedVariables = 32;

class TaylorLayout {
 public:
  static std::shared_ptr<const TaylorLayout> get(int nvars, int order);

  int nvars() const noexcept { return nvars_; }
  int order() const noexcept { return order_; }
  int size() const noexcept { return size_; }

  int index() const noexcept { return 0; }
  int index(int i) const noexcept { return 1 + i; }
  int index(int i, int j) const noexcept { return lut2_[static_cast<std::size_t>(i * nvars_ + j)]; }
  int index(int i, int j, int k) const noexcept {
    return lut3_[static_cast<std::size_t>((i * nvars_ + j) * nvars_ + k)];
  }

  int degree(int idx) const noexcept { return degree_[static_cast<std::size_t>(idx)]; }
  const std::array<std::int8_t, 3>& monomial(int idx) const noexcept {
    return monomials_[static_cast<std::size_t>(idx)];
  }

  struct Term {
    int a, b, out;
  };
  // Pairs (a, b) of non-constant monomials with deg(a) + deg(b) <= order.
  const std::vector<Term>& products() const noexcept { return products_; }

  struct PartialTerm {
    int src;
    int dst;
    double factor;
  };
  // d/dx_v maps this layout onto the layout of order - 1.
  const std::vector<PartialTerm>& partial_terms(int v) const {
    return partials_[static_cast<std::size_t>(v)];
  }

  TaylorLayout(int nvars, int order);

 private:
  int nvars_;
  int order_;
  int size_;
  std::vector<int> degree_;
  std::vector<std::array<std::int8_t, 3>> monomials_;
  std::vector<int> lut2_;
  std::vector<int> lut3_;
  std::vector<Term> products_;
  std::vector<std::vector<PartialTerm>> partials_;
};

class DiffScalar {
 public:
  DiffScalar() : coef_{0.0} {}
  DiffScalar(double c) : coef_{c} {}  // NOLINT: implicit promotion of constants

  static DiffScalar variable(double value, int index, int nvars, int order);
  static DiffScalar constant(double value, int nvars, int order);

  double value() const noexcept { return coef_[0]; }
  bool is_constant() const noexcept { return layout_ == nullptr; }
  int nvars() const noexcept { return layout_ ? layout_->nvars() : 0; }
  // Constants carry no derivative information; their order is reported as the cap.
  int order() const noexcept { return layout_ ? layout_->order() : kMaxDerivativeOrder; }

  double d(int i) const;
  double d(int i, int j) const;
  double d(int i, int j, int k) const;

  DiffScalar partial(int i) const;
  DiffScalar truncated(int order) const;

  std::span<const double> coefficients() const noexcept { return coef_; }
  const TaylorLayout* layout() const noexcept { return layout_.get(); }

  DiffScalar operator-() const;
  DiffScalar& operator+=(const DiffScalar& o);
  DiffScalar& operator-=(const DiffScalar& o);
  DiffScalar& operator*=(const DiffScalar& o);
  DiffScalar& operator/=(const DiffScalar& o);

  friend DiffScalar operator+(DiffScalar a, const DiffScalar& b) { return a += b; }
  friend DiffScalar operator-(DiffScalar a, const DiffScalar& b) { return a -= b; }
  friend DiffScalar operator*(const DiffScalar& a, const DiffScalar& b);
  friend DiffScalar operator/(const DiffScalar& a, const DiffScalar& b);

  // f(a) = sum_k f^(k)(a0)/k! (a - a0)^k with derivs = {f(a0), f'(a0), f''(a0), f'''(a0)}.
  DiffScalar compose(const std::array<double, 4>& derivs) const;

 private:
  DiffScalar(std::shared_ptr<const TaylorLayout> layout, std::vector<double> coef)
      : layout_(std::move(layout)), coef_(std::move(coef)) {}

  static std::shared_ptr<const TaylorLayout> common_layout(const DiffScalar& a, const DiffScalar& b);
  DiffScalar resized(std::shared_ptr<const TaylorLayout> layout) const;

  std::shared_ptr<const TaylorLayout> layout_;
  std::vector<double> coef_;
};

inline double value_of(double x) { return x; }
inline double value_of(const DiffScalar& x) { return x.value(); }

DiffScalar exp(const DiffScalar& a);
DiffScalar log(const DiffScalar& a);
DiffScalar sin(const DiffScalar& a);
DiffScalar cos(const DiffScalar& a);
DiffScalar tanh(const DiffScalar& a);
DiffScalar sqrt(const DiffScalar& a);
DiffScalar pow(const DiffScalar& a, double exponent);
DiffScalar pow(const DiffScalar& a, const DiffScalar& b);
DiffScalar abs(const DiffScalar& a);

// Seeds every coordinate of `point` as an independent variable.
std::vector<DiffScalar> seed_variables(std::span<const double> point, int order);

}  // namespace jetplasma
