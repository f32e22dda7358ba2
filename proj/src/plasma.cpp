#include "jetplasma/plasma.hpp"

#include <algorithm>
#include <cmath>

#include "jetplasma/errors.hpp"

namespace jetplasma {

namespace {

// H_rs G^{rs} with G^{rs} = g^{rp} g^{sq} G_pq.
template <class S>
S contract_hg(const Tensor<S>& ginv, const Tensor<S>& H, const Tensor<S>& G) {
  const int n = ginv.extent(0);
  S acc(0.0);
  for (int r = 0; r < n; ++r) {
    for (int s = 0; s < n; ++s) {
      S gup(0.0);
      for (int p = 0; p < n; ++p) {
        for (int q = 0; q < n; ++q) gup += ginv(r, p) * ginv(s, q) * G(p, q);
      }
      acc += H(r, s) * gup;
    }
  }
  return acc;
}

}  // namespace

template <class S>
EnergyParts<S> minkowski_energy(const Tensor<S>& g, const Tensor<S>& ginv, const Tensor<S>& H, const Tensor<S>& G) {
  const int n = g.extent(0);
  const S hg = contract_hg(ginv, H, G);
  const Slot down = g.slot(0);
  EnergyParts<S> out{Tensor<S>({n, n}, {down, down}), {}};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      S acc = 0.25 * g(i, j) * hg;
      for (int r = 0; r < n; ++r) {
        for (int s = 0; s < n; ++s) acc += ginv(r, s) * H(i, r) * G(j, s);
      }
      out.lower(i, j) = acc;
    }
  }
  out.mixed = raise_lower(out.lower, 0, ginv);
  return out;
}

template <class S>
Tensor<S> minkowski_mixed_direct(const Tensor<S>& ginv, const Tensor<S>& H, const Tensor<S>& G) {
  const int n = ginv.extent(0);
  const IndexKind kind = ginv.slot(0).kind;
  const S hg = contract_hg(ginv, H, G);
  // H^m_r = g^{mp} H_pr, G^r_i = g^{rs} G_si
  Tensor<S> hup({n, n}, {Slot{kind, Variance::Up}, Slot{kind, Variance::Down}});
  Tensor<S> gup({n, n}, {Slot{kind, Variance::Up}, Slot{kind, Variance::Down}});
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      S h(0.0), q(0.0);
      for (int p = 0; p < n; ++p) {
        h += ginv(a, p) * H(p, b);
        q += ginv(a, p) * G(p, b);
      }
      hup(a, b) = h;
      gup(a, b) = q;
    }
  }
  Tensor<S> out({n, n}, {Slot{kind, Variance::Up}, Slot{kind, Variance::Down}});
  for (int m = 0; m < n; ++m) {
    for (int i = 0; i < n; ++i) {
      S acc = m == i ? 0.25 * hg : S(0.0);
      for (int r = 0; r < n; ++r) acc -= hup(m, r) * gup(r, i);
      out(m, i) = acc;
    }
  }
  return out;
}

template EnergyParts<double> minkowski_energy(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                                              const Tensor<double>&);
template EnergyParts<DiffScalar> minkowski_energy(const Tensor<DiffScalar>&, const Tensor<DiffScalar>&,
                                                  const Tensor<DiffScalar>&, const Tensor<DiffScalar>&);
template Tensor<double> minkowski_mixed_direct(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&);
template Tensor<DiffScalar> minkowski_mixed_direct(const Tensor<DiffScalar>&, const Tensor<DiffScalar>&,
                                                   const Tensor<DiffScalar>&);

bool inertial_factor_singular(double p, double rho, double c) {
  const double rc2 = rho * c * c;
  return !(std::abs(p + rc2) > kSingularFactorTolerance * std::max({std::abs(p), std::abs(rc2), 1.0}));
}

double Residual::norm() const { return max_abs(value); }

void ResidualReport::add(std::string name, RealTensor value) {
  auto it = index_.find(name);
  if (it != index_.end()) {
    entries_[it->second].value = std::move(value);
    return;
  }
  index_.emplace(name, entries_.size());
  entries_.push_back(Residual{std::move(name), std::move(value)});
}

void ResidualReport::add(std::string name, double value) { add(std::move(name), RealTensor::scalar(value)); }

bool ResidualReport::contains(const std::string& name) const { return index_.count(name) != 0; }

const RealTensor& ResidualReport::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("residual report has no entry '" + name + "'");
  return entries_[it->second].value;
}

double ResidualReport::norm(const std::string& name) const { return max_abs(at(name)); }

}  // namespace jetplasma
