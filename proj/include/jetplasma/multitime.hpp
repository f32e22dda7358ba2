#pragma once

// Plasma on the 1-jet space J^1(T, M) of a multi-time generalized Lagrange
// space.  Seed order: t1..tp, x1..xn, then x{i}_{a} at jet_fiber_index().

#include <span>
#include <vector>

#include "jetplasma/fields.hpp"
#include "jetplasma/plasma.hpp"
#include "jetplasma/riemann.hpp"

namespace jetplasma::multitime {

using riemann::ElectromagneticPair;

/// h_ab(t) is read on the t-coordinates only.  N(i, a, j) = N^{(i)}_{(a)j}
/// with slots (LatinUp, GreekDown, LatinDown); only its value is used.
struct Space {
  int p = 0;
  int n = 0;
  MetricField h;
  MetricField g;
  TensorField N;
};

struct JetPoint {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> xdot;  // xdot[i * p + a] = x^i_a
  std::vector<double> coordinates() const;
};

struct FluidState {
  ScalarField pressure;
  ScalarField density;
  double c = 1.0;
  ElectromagneticPair em;
};

/// kappa^c_ab, [c, a, b], greek slots.
RealTensor temporal_christoffel(const Space& space, std::span<const double> t);

struct AdaptedDerivatives {
  RealTensor dt;     // delta f / delta t^a
  RealTensor dx;     // delta f / delta x^i
  RealTensor dfiber; // [i, a] = df / dx^i_a
};

AdaptedDerivatives adapted_jet_derivatives(const ScalarField& f, const Space& space, const JetPoint& jp);

struct CartanGamma {
  RealTensor kappa;  // [c, a, b] = kappa^c_ab
  RealTensor G;      // [k, j, c] = G^k_jc
  RealTensor L;      // [i, j, k] = L^i_jk
  RealTensor C;      // [i, j, c, k] = C^{i(c)}_{j(k)}
};

CartanGamma cartan_gamma(const Space& space, const JetPoint& jp);

enum class DerivativeKind { TemporalHorizontal, SpatialHorizontal, Vertical };

/// h_T and h_M append one derivative slot (greek resp. latin).  The vertical
/// derivative appends the pair (GreekUp eps, LatinDown p).
RealTensor jet_covariant_derivative(const TensorField& t, const Space& space, const JetPoint& jp, DerivativeKind kind);

struct Velocity {
  double eps = 0.0;
  RealTensor up;    // u^i_a, [i, a]
  RealTensor down;  // u_{ia}, [i, a]
};

Velocity multitime_velocity(const Space& space, const JetPoint& jp);

/// Index reading of the vertical conservation residual: free (i, mu) or
/// summed over mu (a covector over i).
enum class VerticalIndex { FreeMu, SummedMu };

/// Residuals: h_conservation [i], h_conservation_direct, h_continuity [mu],
/// h_lorentz_condition [a], h_lorentz_force [r], v_conservation ([i, mu] or
/// [i]), v_conservation_direct, v_continuity (mu summed),
/// v_lorentz_condition, v_lorentz_force [r, mu], stress, stress_mixed,
/// energy, energy_mixed.  Invariants are listed by invariant_names().
ResidualReport residuals(const FluidState& state, const Space& space, const JetPoint& jp,
                         VerticalIndex vertical = VerticalIndex::FreeMu);
const std::vector<std::string>& invariant_names();

/// Adapted components T_CF on the index set (a, i, (i)(a)) in that order.
std::vector<std::vector<double>> stress_block_table(const FluidState& state, const Space& space, const JetPoint& jp);

struct SheetResidual {
  RealTensor horizontal;  // [k]
  RealTensor vertical;    // [k, mu]
};

enum class SheetForm { Reduced, Covariant };

/// Coefficients of the stream-sheet PDEs at a jet point, eps0 = eps there.
struct SheetCoefficients {
  double eps0 = 0.0;
  double w = 0.0;     // rho + p / c^2
  RealTensor H;       // [m] = delta_m(w / eps0) + w delta_m(1 / eps0)
  RealTensor V;       // [m, mu], fiber analogue of H
  RealTensor rhs_h;   // [k] = eps0 (F_h^k - g^km p_,,m)
  RealTensor rhs_v;   // [k, mu]
};

SheetCoefficients stream_sheet_coefficients(const FluidState& state, const Space& space, const JetPoint& jp);

/// Left minus right side of the stream-sheet PDEs at a jet point (the jet of
/// the sheet).  Reduced uses the H_m / V^(mu)_(m) form, Covariant applies
/// the h_M and v derivatives to w x^m_a / eps0 and x^k_b / eps0 directly.
SheetResidual stream_sheet_residuals(const FluidState& state, const Space& space, const JetPoint& jp,
                                     SheetForm form = SheetForm::Reduced);

/// Regular grid over a box in T (p <= 2), node-major with the last axis
/// fastest.  values[node] holds x^i at that node.
struct StreamSheet {
  int n = 0;
  std::vector<double> origin;
  std::vector<double> spacing;
  std::vector<int> nodes;
  std::vector<std::vector<double>> values;

  int p() const { return static_cast<int>(nodes.size()); }
  std::size_t node_count() const;
  std::vector<int> unravel(std::size_t node) const;
  std::size_t ravel(std::span<const int> index) const;
  std::vector<double> time(std::size_t node) const;
  bool interior(std::size_t node) const;
};

/// Jet of the sheet at every node: second-order central differences inside,
/// second-order one-sided differences on the boundary.
std::vector<JetPoint> prolong_sheet(const StreamSheet& sheet, const Space& space);

}  // namespace jetplasma::multitime
