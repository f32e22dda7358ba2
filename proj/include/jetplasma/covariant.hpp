#pragma once

// Valence-driven covariant derivative engine shared by all three pipelines.
//
// A covariant derivative along a family of directions d = 0..D-1 is
//
//   T^{a..}_{b..;d} = dT^{a..}_{b..}/d(direction d)
//                     + sum over up slots   Gamma^a_{m d} T^{..m..}
//                     - sum over down slots Gamma^m_{b d} T_{..m..}
//
// where Gamma is chosen by the index kind of the slot (latin or greek).  A
// kind without a block gets no correction.

#include <span>
#include <string>
#include <vector>

#include "jetplasma/tensor.hpp"

namespace jetplasma {

/// Partial derivatives of every component with respect to the seed variables
/// `vars`, appended as a trailing slot tagged `slot`.
RealTensor gradient(const DiffTensor& t, std::span<const int> vars, Slot slot);

/// Same for a scalar: a rank-1 tensor over `vars`.
RealTensor gradient(const DiffScalar& s, std::span<const int> vars, Slot slot);

/// Connection blocks indexed [a, b, d] = Gamma^a_{b d}.
struct ConnectionBlocks {
  const RealTensor* latin = nullptr;
  const RealTensor* greek = nullptr;
};

/// `partial` is the (adapted) partial derivative of `value` with the
/// direction slot last.  The result carries the slots of `partial`.
RealTensor covariant_derivative(const RealTensor& value, const RealTensor& partial, ConnectionBlocks blocks);

/// Christoffel-type combination (g^{im}/2)(D_k g_jm + D_j g_km - D_m g_jk)
/// where dg[j, m, k] = D_k g_jm for some derivative family D.  Returns
/// [i, j, k] tagged (up, down, down) in the kind of the metric slots.
RealTensor christoffel_form(const RealTensor& inverse_metric, const RealTensor& dg);

/// Contracts slot `a` against slot `b` of a tensor (trace).
RealTensor trace(const RealTensor& t, int a, int b);

/// Tensor product with the slots of `b` appended.
RealTensor outer(const RealTensor& a, const RealTensor& b);

/// Linear combination a + s * b (shapes must match).
RealTensor axpy(const RealTensor& a, double s, const RealTensor& b);

/// Indices (seed variable numbers) of a contiguous coordinate block.
std::vector<int> index_range(int first, int count);

}  // namespace jetplasma
