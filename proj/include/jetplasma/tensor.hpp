#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "jetplasma/diff_scalar.hpp"
#include "jetplasma/errors.hpp"

namespace jetplasma {

inline constexpr int kMaxExtent = 8;

enum class IndexKind { Latin, Greek };
enum class Variance { Up, Down };

struct Slot {
  IndexKind kind = IndexKind::Latin;
  Variance variance = Variance::Down;

  friend bool operator==(const Slot&, const Slot&) = default;
};

inline constexpr Slot kLatinUp{IndexKind::Latin, Variance::Up};
inline constexpr Slot kLatinDown{IndexKind::Latin, Variance::Down};
inline constexpr Slot kGreekUp{IndexKind::Greek, Variance::Up};
inline constexpr Slot kGreekDown{IndexKind::Greek, Variance::Down};

std::string to_string(const Slot& slot);

/// Dense row-major tensor with per-slot valence tags. Every access is
/// bounds-checked.
template <class S>
class Tensor {
 public:
  Tensor() = default;

  Tensor(std::vector<int> extents, std::vector<Slot> slots, const S& fill = S(0.0))
      : extents_(std::move(extents)), slots_(std::move(slots)) {
    if (slots_.size() != extents_.size()) throw ShapeError("slot tags do not match tensor rank");
    std::size_t count = 1;
    for (int e : extents_) {
      if (e < 1 || e > kMaxExtent) throw ShapeError("tensor extent " + std::to_string(e) + " outside [1, 8]");
      count *= static_cast<std::size_t>(e);
    }
    data_.assign(count, fill);
  }

  static Tensor scalar(const S& v) {
    Tensor t;
    t.data_.assign(1, v);
    return t;
  }

  int rank() const noexcept { return static_cast<int>(extents_.size()); }
  const std::vector<int>& extents() const noexcept { return extents_; }
  int extent(int slot) const { return extents_.at(static_cast<std::size_t>(slot)); }
  const std::vector<Slot>& slots() const noexcept { return slots_; }
  const Slot& slot(int s) const { return slots_.at(static_cast<std::size_t>(s)); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<S> data() noexcept { return data_; }
  std::span<const S> data() const noexcept { return data_; }

  std::size_t offset(std::span<const int> idx) const {
    if (idx.size() != extents_.size()) {
      throw ShapeError("index of rank " + std::to_string(idx.size()) + " used on a rank-" +
                       std::to_string(extents_.size()) + " tensor");
    }
    std::size_t off = 0;
    for (std::size_t s = 0; s < idx.size(); ++s) {
      if (idx[s] < 0 || idx[s] >= extents_[s]) {
        throw ShapeError("index " + std::to_string(idx[s]) + " out of range for slot " + std::to_string(s) +
                         " of extent " + std::to_string(extents_[s]));
      }
      off = off * static_cast<std::size_t>(extents_[s]) + static_cast<std::size_t>(idx[s]);
    }
    return off;
  }

  S& at(std::span<const int> idx) { return data_[offset(idx)]; }
  const S& at(std::span<const int> idx) const { return data_[offset(idx)]; }

  template <class... I>
  S& operator()(I... i) {
    const int idx[] = {static_cast<int>(i)...};
    return data_[offset(idx)];
  }
  template <class... I>
  const S& operator()(I... i) const {
    const int idx[] = {static_cast<int>(i)...};
    return data_[offset(idx)];
  }

  // Unravels a flat offset into a multi-index.
  void unravel(std::size_t flat, std::span<int> idx) const {
    for (std::size_t s = extents_.size(); s-- > 0;) {
      idx[s] = static_cast<int>(flat % static_cast<std::size_t>(extents_[s]));
      flat /= static_cast<std::size_t>(extents_[s]);
    }
  }

 private:
  std::vector<int> extents_;
  std::vector<Slot> slots_;
  std::vector<S> data_;
};

using RealTensor = Tensor<double>;
using DiffTensor = Tensor<DiffScalar>;

RealTensor values(const DiffTensor& t);

/// Componentwise first partial derivative with respect to one seed variable.
RealTensor partial_slice(const DiffTensor& t, int variable);

/// Lowers every component of `t` to its order-(k-1) derivative field.
DiffTensor partial_field(const DiffTensor& t, int variable);

double max_abs(const RealTensor& t);
double max_abs_diff(const RealTensor& a, const RealTensor& b);

RealTensor zeros(std::vector<int> extents, std::vector<Slot> slots);

/// Inverse of a symmetric matrix (rank-2 tensor) by Gauss-Jordan elimination
/// with partial pivoting.  Works for any scalar type; with DiffScalar entries
/// the derivatives of the inverse follow from the algebra.  Throws
/// DegenerateMetricError when a pivot magnitude drops below
/// 1e-13 * (max |entry|); `where` is appended to the message.
template <class S>
Tensor<S> invert_symmetric(const Tensor<S>& m, const std::string& where = "");

/// Contracts `metric` (either the metric or its inverse, given as a rank-2
/// tensor) against `slot` of `t`.  The slot variance flips.
template <class S>
Tensor<S> raise_lower(const Tensor<S>& t, int slot, const Tensor<S>& metric);

extern template Tensor<double> invert_symmetric(const Tensor<double>&, const std::string&);
extern template Tensor<DiffScalar> invert_symmetric(const Tensor<DiffScalar>&, const std::string&);
extern template Tensor<double> raise_lower(const Tensor<double>&, int, const Tensor<double>&);
extern template Tensor<DiffScalar> raise_lower(const Tensor<DiffScalar>&, int, const Tensor<DiffScalar>&);

inline constexpr double kPivotTolerance = 1e-13;

}  // namespace jetplasma
