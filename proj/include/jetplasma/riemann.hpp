#pragma once

// Plasma on a semi-Riemannian space-time (M, phi_ij(x)).  Coordinates are
// x1..xn; every field is a function of x only.

#include <span>
#include <vector>

#include "jetplasma/fields.hpp"
#include "jetplasma/plasma.hpp"

namespace jetplasma::riemann {

struct Space {
  int n = 0;
  MetricField phi;
};

/// Antisymmetric 2-forms H_ij and G_ij.
struct ElectromagneticPair {
  TensorField H;
  TensorField G;
  static ElectromagneticPair zero(int n);
};

struct FluidState {
  ScalarField pressure;
  ScalarField density;
  double c = 1.0;
  TensorField velocity;  // v^i before normalization; may be unset for stream lines
};

/// gamma^i_jk, slots (up, down, down).
RealTensor christoffel(const Space& space, std::span<const double> x);

/// T_{..;p} of an all-latin tensor field; the derivative slot is appended.
RealTensor levi_civita_derivative(const TensorField& t, const Space& space, std::span<const double> x);

/// u^i = v^i / sqrt(phi_rs v^r v^s).
RealTensor normalize_velocity(const FluidState& state, const Space& space, std::span<const double> x);

struct TensorPair {
  RealTensor lower;
  RealTensor mixed;
};

TensorPair minkowski_energy(const Space& space, const ElectromagneticPair& em, std::span<const double> x);
RealTensor lorentz_force(const Space& space, const ElectromagneticPair& em, std::span<const double> x);
double lorentz_condition_residual(const Space& space, const ElectromagneticPair& em, const FluidState& state,
                                  std::span<const double> x);
TensorPair stress_tensor(const FluidState& state, const Space& space, const ElectromagneticPair& em,
                         std::span<const double> x);

/// Expanded form [(rho+p/c^2)u^m]_{;m} u_i + (rho+p/c^2) u^m u_{i;m} + p_{,i} - phi_ir F^r.
RealTensor conservation_residual(const FluidState& state, const Space& space, const ElectromagneticPair& em,
                                 std::span<const double> x);
/// Direct divergence T^m_{i;m}.
RealTensor conservation_divergence(const FluidState& state, const Space& space, const ElectromagneticPair& em,
                                   std::span<const double> x);
double continuity_residual(const FluidState& state, const Space& space, const ElectromagneticPair& em,
                           std::span<const double> x);
RealTensor euler_residual(const FluidState& state, const Space& space, const ElectromagneticPair& em,
                          std::span<const double> x);

/// Every named residual and invariant of the pipeline at one point.
///
/// Residuals: conservation, conservation_direct, continuity, euler,
/// lorentz_condition, lorentz_force, stress, stress_mixed, energy,
/// energy_mixed.  Invariants (all zero in exact arithmetic):
/// metric_compat, inverse_metric_compat, unit_norm, normalization_u_du,
/// normalization_du_u, contraction_identity, euler_decomposition,
/// conservation_paths, stress_mixed_form, energy_mixed_form,
/// energy_mixed_identity.
ResidualReport residuals(const FluidState& state, const Space& space, const ElectromagneticPair& em,
                         std::span<const double> x);

/// Names of the invariant entries of residuals().
const std::vector<std::string>& invariant_names();

/// d^2 x^k / ds^2 from the stream-line equations.
RealTensor stream_line_rhs(const FluidState& state, const Space& space, const ElectromagneticPair& em,
                           std::span<const double> x, std::span<const double> xdot);

struct TrajectoryRow {
  double s = 0.0;
  std::vector<double> x;
  std::vector<double> xdot;
};

using Rhs = std::function<std::vector<double>(std::span<const double>, std::span<const double>)>;

/// Classical RK4 on (x, xdot) with N steps of size h; N+1 rows.
std::vector<TrajectoryRow> integrate(const Rhs& rhs, std::span<const double> x0, std::span<const double> v0, double h,
                                     int steps);

std::vector<TrajectoryRow> integrate_stream_line(const FluidState& state, const Space& space,
                                                 const ElectromagneticPair& em, std::span<const double> x0,
                                                 std::span<const double> v0, double h, int steps);

}  // namespace jetplasma::riemann
