#include "jetplasma/diff_scalar.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "jetplasma/errors.hpp"

namespace jetplasma {

namespace {

int binomial(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<int>(r);
}

std::array<std::int8_t, 3> merge(const std::array<std::int8_t, 3>& a, int da,
                                 const std::array<std::int8_t, 3>& b, int db) {
  std::array<std::int8_t, 3> m{-1, -1, -1};
  std::int8_t tmp[6];
  int n = 0;
  for (int i = 0; i < da; ++i) tmp[n++] = a[static_cast<std::size_t>(i)];
  for (int i = 0; i < db; ++i) tmp[n++] = b[static_cast<std::size_t>(i)];
  std::sort(tmp, tmp + n);
  for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = tmp[i];
  return m;
}

}  // namespace

TaylorLayout::TaylorLayout(int nvars, int order) : nvars_(nvars), order_(order) {
  size_ = binomial(nvars + order, order);
  degree_.reserve(static_cast<std::size_t>(size_));
  monomials_.reserve(static_cast<std::size_t>(size_));
  degree_.push_back(0);
  monomials_.push_back({-1, -1, -1});
  if (order >= 1) {
    for (int i = 0; i < nvars; ++i) {
      degree_.push_back(1);
      monomials_.push_back({static_cast<std::int8_t>(i), -1, -1});
    }
  }
  if (order >= 2) {
    lut2_.assign(static_cast<std::size_t>(nvars * nvars), -1);
    for (int i = 0; i < nvars; ++i) {
      for (int j = i; j < nvars; ++j) {
        const int idx = static_cast<int>(degree_.size());
        degree_.push_back(2);
        monomials_.push_back({static_cast<std::int8_t>(i), static_cast<std::int8_t>(j), -1});
        lut2_[static_cast<std::size_t>(i * nvars + j)] = idx;
        lut2_[static_cast<std::size_t>(j * nvars + i)] = idx;
      }
    }
  }
  if (order >= 3) {
    lut3_.assign(static_cast<std::size_t>(nvars * nvars * nvars), -1);
    for (int i = 0; i < nvars; ++i) {
      for (int j = i; j < nvars; ++j) {
        for (int k = j; k < nvars; ++k) {
          const int idx = static_cast<int>(degree_.size());
          degree_.push_back(3);
          monomials_.push_back({static_cast<std::int8_t>(i), static_cast<std::int8_t>(j),
                                static_cast<std::int8_t>(k)});
          const int perm[6][3] = {{i, j, k}, {i, k, j}, {j, i, k}, {j, k, i}, {k, i, j}, {k, j, i}};
          for (const auto& p : perm) {
            lut3_[static_cast<std::size_t>((p[0] * nvars + p[1]) * nvars + p[2])] = idx;
          }
        }
      }
    }
  }

  auto lookup = [this](const std::array<std::int8_t, 3>& m, int deg) {
    switch (deg) {
      case 0: return 0;
      case 1: return index(m[0]);
      case 2: return index(m[0], m[1]);
      default: return index(m[0], m[1], m[2]);
    }
  };

  for (int a = 1; a < size_; ++a) {
    for (int b = 1; b < size_; ++b) {
      const int deg = degree_[static_cast<std::size_t>(a)] + degree_[static_cast<std::size_t>(b)];
      if (deg > order_) continue;
      const auto m = merge(monomials_[static_cast<std::size_t>(a)], degree_[static_cast<std::size_t>(a)],
                           monomials_[static_cast<std::size_t>(b)], degree_[static_cast<std::size_t>(b)]);
      products_.push_back({a, b, lookup(m, deg)});
    }
  }

  partials_.resize(static_cast<std::size_t>(nvars));
  if (order_ >= 1) {
    const int lower = binomial(nvars + order - 1, order - 1);
    for (int v = 0; v < nvars; ++v) {
      const std::array<std::int8_t, 3> single{static_cast<std::int8_t>(v), -1, -1};
      for (int m = 0; m < lower; ++m) {
        const int deg = degree_[static_cast<std::size_t>(m)];
        const auto up = merge(monomials_[static_cast<std::size_t>(m)], deg, single, 1);
        double mult = 0.0;
        for (int q = 0; q <= deg; ++q) {
          if (up[static_cast<std::size_t>(q)] == v) mult += 1.0;
        }
        partials_[static_cast<std::size_t>(v)].push_back({lookup(up, deg + 1), m, mult});
      }
    }
  }
}

std::shared_ptr<const TaylorLayout> TaylorLayout::get(int nvars, int order) {
  if (order < 0 || order > kMaxDerivativeOrder) {
    throw Error("derivative order " + std::to_string(order) + " exceeds the supported maximum of " +
                std::to_string(kMaxDerivativeOrder));
  }
  if (nvars < 1 || nvars > kMaxSeedVariables) {
    throw Error("seed variable count " + std::to_string(nvars) + " outside [1, " +
                std::to_string(kMaxSeedVariables) + "]");
  }
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const TaylorLayout>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{nvars, order}];
  if (!slot) slot = std::make_shared<const TaylorLayout>(nvars, order);
  return slot;
}

DiffScalar DiffScalar::variable(double value, int index, int nvars, int order) {
  auto layout = TaylorLayout::get(nvars, order);
  if (index < 0 || index >= nvars) throw std::out_of_range("seed index out of range");
  std::vector<double> coef(static_cast<std::size_t>(layout->size()), 0.0);
  coef[0] = value;
  if (order >= 1) coef[static_cast<std::size_t>(layout->index(index))] = 1.0;
  return DiffScalar(std::move(layout), std::move(coef));
}

DiffScalar DiffScalar::constant(double value, int nvars, int order) {
  auto layout = TaylorLayout::get(nvars, order);
  std::vector<double> coef(static_cast<std::size_t>(layout->size()), 0.0);
  coef[0] = value;
  return DiffScalar(std::move(layout), std::move(coef));
}

double DiffScalar::d(int i) const {
  if (!layout_) return 0.0;
  if (layout_->order() < 1) throw Error("first derivative requested from an order-0 scalar");
  return coef_[static_cast<std::size_t>(layout_->index(i))];
}

double DiffScalar::d(int i, int j) const {
  if (!layout_) return 0.0;
  if (layout_->order() < 2) throw Error("second derivative requested from a scalar of order < 2");
  const double c = coef_[static_cast<std::size_t>(layout_->index(i, j))];
  return i == j ? 2.0 * c : c;
}

double DiffScalar::d(int i, int j, int k) const {
  if (!layout_) return 0.0;
  if (layout_->order() < 3) throw Error("third derivative requested from a scalar of order < 3");
  const double c = coef_[static_cast<std::size_t>(layout_->index(i, j, k))];
  if (i == j && j == k) return 6.0 * c;
  if (i == j || j == k || i == k) return 2.0 * c;
  return c;
}

DiffScalar DiffScalar::partial(int i) const {
  if (!layout_) return DiffScalar(0.0);
  if (i < 0 || i >= layout_->nvars()) throw std::out_of_range("partial index out of range");
  if (layout_->order() < 1) throw Error("cannot differentiate an order-0 scalar");
  auto lower = TaylorLayout::get(layout_->nvars(), layout_->order() - 1);
  std::vector<double> out(static_cast<std::size_t>(lower->size()), 0.0);
  for (const auto& t : layout_->partial_terms(i)) {
    out[static_cast<std::size_t>(t.dst)] = t.factor * coef_[static_cast<std::size_t>(t.src)];
  }
  return DiffScalar(std::move(lower), std::move(out));
}

DiffScalar DiffScalar::truncated(int order) const {
  if (!layout_ || order >= layout_->order()) return *this;
  return resized(TaylorLayout::get(layout_->nvars(), order));
}

DiffScalar DiffScalar::resized(std::shared_ptr<const TaylorLayout> layout) const {
  std::vector<double> c(coef_.begin(), coef_.begin() + layout->size());
  return DiffScalar(std::move(layout), std::move(c));
}

std::shared_ptr<const TaylorLayout> DiffScalar::common_layout(const DiffScalar& a, const DiffScalar& b) {
  if (!a.layout_) return b.layout_;
  if (!b.layout_) return a.layout_;
  if (a.layout_->nvars() != b.layout_->nvars()) {
    throw std::logic_error("DiffScalar operands seeded on different variable sets");
  }
  return a.layout_->order() <= b.layout_->order() ? a.layout_ : b.layout_;
}

DiffScalar DiffScalar::operator-() const {
  DiffScalar r = *this;
  for (auto& c : r.coef_) c = -c;
  return r;
}

DiffScalar& DiffScalar::operator+=(const DiffScalar& o) {
  auto layout = common_layout(*this, o);
  if (layout != layout_ && layout_) *this = resized(layout);
  if (!layout_ && layout) {
    const double c = coef_[0];
    *this = o.layout_ == layout ? o : o.resized(layout);
    coef_[0] = c + coef_[0];
    return *this;
  }
  const std::size_t n = std::min(coef_.size(), o.coef_.size());
  for (std::size_t i = 0; i < n; ++i) coef_[i] += o.coef_[i];
  return *this;
}

DiffScalar& DiffScalar::operator-=(const DiffScalar& o) {
  auto layout = common_layout(*this, o);
  if (layout != layout_ && layout_) *this = resized(layout);
  if (!layout_ && layout) {
    const double c = coef_[0];
    *this = o.layout_ == layout ? -o : -o.resized(layout);
    coef_[0] = c - o.coef_[0];
    return *this;
  }
  const std::size_t n = std::min(coef_.size(), o.coef_.size());
  for (std::size_t i = 0; i < n; ++i) coef_[i] -= o.coef_[i];
  return *this;
}

DiffScalar operator*(const DiffScalar& a, const DiffScalar& b) {
  if (!a.layout_ && !b.layout_) return DiffScalar(a.coef_[0] * b.coef_[0]);
  if (!a.layout_ || !b.layout_) {
    const DiffScalar& s = a.layout_ ? a : b;
    const double k = a.layout_ ? b.coef_[0] : a.coef_[0];
    DiffScalar r = s;
    for (auto& c : r.coef_) c *= k;
    // keep the value product in the same operand order as the plain computation
    r.coef_[0] = a.coef_[0] * b.coef_[0];
    return r;
  }
  auto layout = DiffScalar::common_layout(a, b);
  std::vector<double> out(static_cast<std::size_t>(layout->size()), 0.0);
  const double a0 = a.coef_[0];
  const double b0 = b.coef_[0];
  out[0] = a0 * b0;
  const std::size_t n = out.size();
  for (std::size_t i = 1; i < n; ++i) out[i] = a0 * b.coef_[i] + a.coef_[i] * b0;
  if (layout->order() >= 2) {
    for (const auto& t : layout->products()) {
      out[static_cast<std::size_t>(t.out)] +=
          a.coef_[static_cast<std::size_t>(t.a)] * b.coef_[static_cast<std::size_t>(t.b)];
    }
  }
  return DiffScalar(std::move(layout), std::move(out));
}

DiffScalar& DiffScalar::operator*=(const DiffScalar& o) { return *this = *this * o; }

DiffScalar operator/(const DiffScalar& a, const DiffScalar& b) {
  if (!b.layout_) {
    DiffScalar r = a;
    for (auto& c : r.coef_) c /= b.coef_[0];
    return r;
  }
  const double b0 = b.coef_[0];
  const double r0 = 1.0 / b0;
  const DiffScalar recip = b.compose({r0, -r0 * r0, 2.0 * r0 * r0 * r0, -6.0 * r0 * r0 * r0 * r0});
  DiffScalar q = a * recip;
  q.coef_[0] = a.coef_[0] / b0;
  return q;
}

DiffScalar& DiffScalar::operator/=(const DiffScalar& o) { return *this = *this / o; }

namespace {

// Keeps the compiler from fusing sin and cos of one argument into sincos,
// whose results may differ in the last bit from the separate calls used by
// plain evaluation.
double opaque(double v) {
#if defined(__GNUC__)
  asm volatile("" : "+m"(v));
#endif
  return v;
}

}  // namespace

DiffScalar DiffScalar::compose(const std::array<double, 4>& f) const {
  if (!layout_) return DiffScalar(f[0]);
  const int order = layout_->order();
  DiffScalar h = *this;
  h.coef_[0] = 0.0;
  std::vector<double> out(coef_.size(), 0.0);
  for (std::size_t i = 1; i < out.size(); ++i) out[i] = f[1] * h.coef_[i];
  if (order >= 2) {
    const DiffScalar h2 = h * h;
    for (std::size_t i = 1; i < out.size(); ++i) out[i] += 0.5 * f[2] * h2.coef_[i];
    if (order >= 3) {
      const DiffScalar h3 = h2 * h;
      for (std::size_t i = 1; i < out.size(); ++i) out[i] += (f[3] / 6.0) * h3.coef_[i];
    }
  }
  out[0] = f[0];
  return DiffScalar(layout_, std::move(out));
}

DiffScalar exp(const DiffScalar& a) {
  const double e = std::exp(a.value());
  return a.compose({e, e, e, e});
}

DiffScalar log(const DiffScalar& a) {
  const double x = a.value();
  const double r = 1.0 / x;
  return a.compose({std::log(x), r, -r * r, 2.0 * r * r * r});
}

DiffScalar sin(const DiffScalar& a) {
  const double s = std::sin(a.value());
  const double c = std::cos(opaque(a.value()));
  return a.compose({s, c, -s, -c});
}

DiffScalar cos(const DiffScalar& a) {
  const double s = std::sin(opaque(a.value()));
  const double c = std::cos(a.value());
  return a.compose({c, -s, -c, s});
}

DiffScalar tanh(const DiffScalar& a) {
  const double t = std::tanh(a.value());
  const double sech2 = 1.0 - t * t;
  return a.compose({t, sech2, -2.0 * t * sech2, sech2 * (6.0 * t * t - 2.0)});
}

DiffScalar sqrt(const DiffScalar& a) {
  const double x = a.value();
  const double s = std::sqrt(x);
  return a.compose({s, 0.5 / s, -0.25 / (x * s), 0.375 / (x * x * s)});
}

DiffScalar pow(const DiffScalar& a, double e) {
  const double x = a.value();
  return a.compose({std::pow(x, e), e * std::pow(x, e - 1.0), e * (e - 1.0) * std::pow(x, e - 2.0),
                    e * (e - 1.0) * (e - 2.0) * std::pow(x, e - 3.0)});
}

DiffScalar pow(const DiffScalar& a, const DiffScalar& b) {
  if (b.is_constant()) return pow(a, b.value());
  DiffScalar r = exp(b * log(a));
  DiffScalar fixed = r - DiffScalar(r.value()) + DiffScalar(std::pow(a.value(), b.value()));
  return fixed;
}

DiffScalar abs(const DiffScalar& a) { return a.value() < 0.0 ? -a : a; }

std::vector<DiffScalar> seed_variables(std::span<const double> point, int order) {
  std::vector<DiffScalar> vars;
  vars.reserve(point.size());
  const int n = static_cast<int>(point.size());
  for (int i = 0; i < n; ++i) {
    vars.push_back(DiffScalar::variable(point[static_cast<std::size_t>(i)], i, n, order));
  }
  return vars;
}

}  // namespace jetplasma
