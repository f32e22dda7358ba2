#pragma once

// Example multi-time spaces (GRGML, RGOGML, EDML, BSML) and the stock base
// metrics (flat, polar, conformal) used by scenarios and tests.
//
// Every field here lives on the multi-time jet coordinates unless noted.
// phi is read on x only, h on t only.

#include <map>
#include <string>
#include <vector>

#include "jetplasma/fields.hpp"
#include "jetplasma/multitime.hpp"

namespace jetplasma::models {

struct CanonicalConnection {
  TensorField M;  // M^{(i)}_{(a)b} = -kappa^m_ab x^i_m, slots (LatinUp, GreekDown, GreekDown)
  TensorField N;  // N^{(i)}_{(a)j} = gamma^i_jm x^m_a
};

CanonicalConnection canonical_connection(const MetricField& h, const MetricField& phi, int n, int p);

multitime::Space build_bsml(const MetricField& h, const MetricField& phi, int n, int p);

/// g = e^{2 sigma} phi.
multitime::Space build_grgml(const MetricField& h, const ScalarField& sigma, const MetricField& phi, int n, int p);

/// g = phi + (1 - 1/refractive_index) Y Y with Y_i = phi_im x^m_mu X^mu(t).
/// Evaluating g throws DegenerateMetricError when the rank-one update makes
/// det g / det phi = 1 + (1 - 1/n) phi^{ij} Y_i Y_j vanish.
multitime::Space build_rgogml(const MetricField& h, const MetricField& phi, const ScalarField& refractive_index,
                              const std::vector<ScalarField>& X, int n, int p);

/// det g / det phi for the RGOGML metric at a jet point.
double rgogml_determinant_ratio(const MetricField& phi, const ScalarField& refractive_index,
                                const std::vector<ScalarField>& X, int n, int p, std::span<const double> coords);

/// U[i * p + a] = U^{(a)}_{(i)}(t, x).
multitime::Space build_edml(const MetricField& h, const MetricField& phi, const std::vector<ScalarField>& U,
                            int n, int p);

/// L_ED = h^{ab} phi_ij x^i_a x^j_b + U^{(a)}_{(i)} x^i_a + Phi.  With U and
/// Phi empty this is L_BS.
ScalarField edml_lagrangian(const MetricField& h, const MetricField& phi, const std::vector<ScalarField>& U,
                            const ScalarField& Phi, int n, int p);

/// Simplified BSML stream-sheet residuals (the L and N terms cancel there).
multitime::SheetResidual bsml_stream_sheet_residuals(const multitime::FluidState& state, const multitime::Space& space,
                                                     const multitime::JetPoint& jp);

/// Max norms of G, C and of L minus the Christoffel symbols of g in x.  All
/// three vanish on a BSML space.
struct Degeneracy {
  double G = 0.0;
  double C = 0.0;
  double L = 0.0;
};
Degeneracy bsml_degeneracy(const multitime::Space& space, const multitime::JetPoint& jp);

/// Stock spatial metrics over an arbitrary coordinate list whose first n
/// spatial names are `x1..xn`: flat, polar (n = 2, diag(1, x1^2)) and
/// conformal (e^{2 sigma} delta).
MetricField stock_metric(const std::string& name, int n, const std::vector<std::string>& coordinates,
                         const std::string& sigma = "");

/// Named model with expression parameters.  Scalars are one-element lists,
/// phi is an upper-triangle list, X has p entries, U has n * p entries.
struct ModelDescriptor {
  std::string name;
  std::map<std::string, std::vector<std::string>> params;
};

/// Keys accepted by a model, and those it requires.
const std::vector<std::string>& model_names();
std::vector<std::string> required_params(const std::string& name);
std::vector<std::string> optional_params(const std::string& name);

/// Validates the descriptor and builds the multi-time space.
multitime::Space build_model(const ModelDescriptor& d, const MetricField& h, int n, int p);

/// Spatial metric of a stock model (flat, polar, conformal) for the riemann
/// and lagrange frameworks.
MetricField build_base_metric(const ModelDescriptor& d, int n, const std::vector<std::string>& coordinates);

}  // namespace jetplasma::models
