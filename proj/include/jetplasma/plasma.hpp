#pragma once

// Algebra shared by the three plasma pipelines: Minkowski energy tensor,
// energy-stress-momentum tensor, velocity normalization, and the residual
// report container.

#include <map>
#include <string>
#include <vector>

#include "jetplasma/tensor.hpp"

namespace jetplasma {

inline constexpr double kSingularFactorTolerance = 1e-12;

template <class S>
struct EnergyParts {
  Tensor<S> lower;  // E_ij
  Tensor<S> mixed;  // E^m_i = g^{mp} E_pi
};

/// E_ij = 1/4 g_ij H_rs G^{rs} + g^{rs} H_ir G_js and its mixed form by
/// raising with g^{mp}.
template <class S>
EnergyParts<S> minkowski_energy(const Tensor<S>& g, const Tensor<S>& ginv, const Tensor<S>& H, const Tensor<S>& G);

/// E^m_i = 1/4 delta^m_i H_rs G^{rs} - H^m_r G^r_i, computed without E_ij.
template <class S>
Tensor<S> minkowski_mixed_direct(const Tensor<S>& ginv, const Tensor<S>& H, const Tensor<S>& G);

/// Relative singularity test for the inertial factor p + rho c^2.
bool inertial_factor_singular(double p, double rho, double c);

struct Residual {
  std::string name;
  RealTensor value;
  double norm() const;  // max norm
};

/// Named residual tensors in insertion order.  Scalars are rank-0 tensors.
class ResidualReport {
 public:
  void add(std::string name, RealTensor value);
  void add(std::string name, double value);

  bool contains(const std::string& name) const;
  const RealTensor& at(const std::string& name) const;
  double norm(const std::string& name) const;
  const std::vector<Residual>& entries() const noexcept { return entries_; }

 private:
  std::vector<Residual> entries_;
  std::map<std::string, std::size_t> index_;
};

extern template EnergyParts<double> minkowski_energy(const Tensor<double>&, const Tensor<double>&,
                                                     const Tensor<double>&, const Tensor<double>&);
extern template EnergyParts<DiffScalar> minkowski_energy(const Tensor<DiffScalar>&, const Tensor<DiffScalar>&,
                                                         const Tensor<DiffScalar>&, const Tensor<DiffScalar>&);
extern template Tensor<double> minkowski_mixed_direct(const Tensor<double>&, const Tensor<double>&,
                                                      const Tensor<double>&);
extern template Tensor<DiffScalar> minkowski_mixed_direct(const Tensor<DiffScalar>&, const Tensor<DiffScalar>&,
                                                          const Tensor<DiffScalar>&);

}  // namespace jetplasma
