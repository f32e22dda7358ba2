#pragma once

// Plasma on a generalized Lagrange space (M, g_ij(x,y), N^i_j(x,y)).
// Coordinates on TM are x1..xn, y1..yn in that seed order.

#include <span>
#include <vector>

#include "jetplasma/fields.hpp"
#include "jetplasma/plasma.hpp"
#include "jetplasma/riemann.hpp"

namespace jetplasma::lagrange {

using riemann::ElectromagneticPair;
using riemann::TensorPair;
using riemann::TrajectoryRow;

/// N(i, j) = N^i_j, slots (LatinUp, LatinDown).  Only its value is used by
/// the pipeline, so N is always evaluated on an order-0 jet.
struct Space {
  int n = 0;
  MetricField g;
  TensorField N;
};

struct TangentPoint {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> coordinates() const;
};

struct FluidState {
  ScalarField pressure;
  ScalarField density;
  double c = 1.0;
  ElectromagneticPair em;
};

/// N^i_j = Gamma^i_jm(x,y) y^m with Gamma the Christoffel symbols of g in x.
TensorField canonical_connection(const MetricField& g, int n);

/// delta f / delta x^i = df/dx^i - N^m_i df/dy^m.
RealTensor adapted_x_derivative(const ScalarField& f, const Space& space, const TangentPoint& pt);

struct CartanConnection {
  RealTensor L;  // [i, j, k] = L^i_jk
  RealTensor C;  // [i, j, k] = C^i_jk
};

CartanConnection cartan_connection(const Space& space, const TangentPoint& pt);

/// D_{..|p} and D_{..}|_p of an all-latin field; the derivative slot is appended.
RealTensor h_covariant(const TensorField& t, const Space& space, const TangentPoint& pt);
RealTensor v_covariant(const TensorField& t, const Space& space, const TangentPoint& pt);

/// Residuals (h_ and v_ prefixed per channel): conservation,
/// conservation_direct, continuity, euler, lorentz_condition, lorentz_force;
/// shared: stress, stress_mixed, energy, energy_mixed.  Invariants are listed
/// by invariant_names().
ResidualReport residuals(const FluidState& state, const Space& space, const TangentPoint& pt);
const std::vector<std::string>& invariant_names();

/// d^2x^k/ds^2 of the horizontal stream-line system at y = xdot, with
/// eps0^2 = g(x, xdot)(xdot, xdot).
RealTensor h_stream_line_rhs(const FluidState& state, const Space& space, std::span<const double> x,
                             std::span<const double> xdot);

/// Left minus right side of the vertical stream-line relation.
RealTensor v_stream_constraint_residual(const FluidState& state, const Space& space, std::span<const double> x,
                                        std::span<const double> xdot);

std::vector<TrajectoryRow> integrate_stream_line(const FluidState& state, const Space& space,
                                                 std::span<const double> x0, std::span<const double> v0, double h,
                                                 int steps);

struct FinslerSpace {
  Space space;         // g = 1/2 d^2 F^2 / dy dy, N = dG/dy
  ScalarField F;
  TensorField spray;   // G^k, slot LatinUp
};

/// F is a field on TM.  The returned metric is usable on jets of order <= 1,
/// the spray on order <= 1, the connection on order 0.
FinslerSpace finsler_space_from_F(const ScalarField& F, int n);

/// Reduced horizontal system for a Finsler metric:
///   -[L - k delta p_,,]xdot xdot + k[F_h - g p_,,] + 2/F^2 [G^k - g_pr G^p xdot^r xdot^k].
RealTensor finsler_h_stream_line_rhs(const FluidState& state, const FinslerSpace& fs, std::span<const double> x,
                                     std::span<const double> xdot);

}  // namespace jetplasma::lagrange
