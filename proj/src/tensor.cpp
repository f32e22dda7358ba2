#include "jetplasma/tensor.hpp"

#include <array>

namespace jetplasma {

std::string to_string(const Slot& slot) {
  std::string s = slot.kind == IndexKind::Latin ? "latin" : "greek";
  s += slot.variance == Variance::Up ? "^" : "_";
  return s;
}

RealTensor values(const DiffTensor& t) {
  RealTensor out(t.extents(), t.slots());
  if (t.rank() == 0) out = RealTensor::scalar(0.0);
  for (std::size_t i = 0; i < t.size(); ++i) out.data()[i] = t.data()[i].value();
  return out;
}

RealTensor partial_slice(const DiffTensor& t, int variable) {
  RealTensor out = t.rank() == 0 ? RealTensor::scalar(0.0) : RealTensor(t.extents(), t.slots());
  for (std::size_t i = 0; i < t.size(); ++i) out.data()[i] = t.data()[i].d(variable);
  return out;
}

DiffTensor partial_field(const DiffTensor& t, int variable) {
  DiffTensor out = t.rank() == 0 ? DiffTensor::scalar(0.0) : DiffTensor(t.extents(), t.slots());
  for (std::size_t i = 0; i < t.size(); ++i) out.data()[i] = t.data()[i].partial(variable);
  return out;
}

double max_abs(const RealTensor& t) {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const RealTensor& a, const RealTensor& b) {
  if (a.extents() != b.extents()) throw ShapeError("max_abs_diff on tensors of different shape");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

RealTensor zeros(std::vector<int> extents, std::vector<Slot> slots) {
  return RealTensor(std::move(extents), std::move(slots), 0.0);
}

template <class S>
Tensor<S> invert_symmetric(const Tensor<S>& m, const std::string& where) {
  if (m.rank() != 2 || m.extent(0) != m.extent(1)) throw ShapeError("invert_symmetric needs a square matrix");
  const int n = m.extent(0);
  double scale = 0.0;
  for (const auto& v : m.data()) scale = std::max(scale, std::abs(value_of(v)));

  std::vector<S> a(m.data().begin(), m.data().end());
  std::vector<S> inv(static_cast<std::size_t>(n * n), S(0.0));
  for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(i * n + i)] = S(1.0);
  auto A = [&](int r, int c) -> S& { return a[static_cast<std::size_t>(r * n + c)]; };
  auto I = [&](int r, int c) -> S& { return inv[static_cast<std::size_t>(r * n + c)]; };

  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(value_of(A(r, col))) > std::abs(value_of(A(pivot, col)))) pivot = r;
    }
    const double pv = std::abs(value_of(A(pivot, col)));
    if (!(pv >= kPivotTolerance * scale) || scale == 0.0) {
      std::string msg = "degenerate metric: pivot " + std::to_string(pv) + " below 1e-13 * " + std::to_string(scale);
      if (!where.empty()) msg += " at " + where;
      throw DegenerateMetricError(msg);
    }
    if (pivot != col) {
      for (int c = 0; c < n; ++c) {
        std::swap(A(pivot, c), A(col, c));
        std::swap(I(pivot, c), I(col, c));
      }
    }
    const S p = A(col, col);
    for (int c = 0; c < n; ++c) {
      A(col, c) = A(col, c) / p;
      I(col, c) = I(col, c) / p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const S f = A(r, col);
      if (value_of(f) == 0.0 && std::is_same_v<S, double>) continue;
      for (int c = 0; c < n; ++c) {
        A(r, c) -= f * A(col, c);
        I(r, c) -= f * I(col, c);
      }
    }
  }

  Tensor<S> out(m.extents(), {Slot{m.slot(0).kind, Variance::Up}, Slot{m.slot(1).kind, Variance::Up}});
  if (m.slot(0).variance == Variance::Up) {
    out = Tensor<S>(m.extents(), {Slot{m.slot(0).kind, Variance::Down}, Slot{m.slot(1).kind, Variance::Down}});
  }
  for (int r = 0; r < n; ++r) {
    out(r, r) = I(r, r);
    for (int c = r + 1; c < n; ++c) {
      const S sym = (I(r, c) + I(c, r)) * S(0.5);
      out(r, c) = sym;
      out(c, r) = sym;
    }
  }
  return out;
}

template <class S>
Tensor<S> raise_lower(const Tensor<S>& t, int slot, const Tensor<S>& metric) {
  if (slot < 0 || slot >= t.rank()) throw ShapeError("raise_lower: slot out of range");
  if (metric.rank() != 2 || metric.extent(0) != metric.extent(1) || metric.extent(0) != t.extent(slot)) {
    throw ShapeError("raise_lower: metric extent does not match slot extent");
  }
  std::vector<Slot> slots = t.slots();
  auto& s = slots[static_cast<std::size_t>(slot)];
  s.variance = s.variance == Variance::Up ? Variance::Down : Variance::Up;
  Tensor<S> out(t.extents(), slots);
  const int n = t.extent(slot);
  std::vector<int> idx(static_cast<std::size_t>(t.rank()));
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out.unravel(flat, idx);
    const int a = idx[static_cast<std::size_t>(slot)];
    S acc(0.0);
    for (int b = 0; b < n; ++b) {
      idx[static_cast<std::size_t>(slot)] = b;
      acc += metric(a, b) * t.at(idx);
    }
    out.data()[flat] = acc;
  }
  return out;
}

template Tensor<double> invert_symmetric(const Tensor<double>&, const std::string&);
template Tensor<DiffScalar> invert_symmetric(const Tensor<DiffScalar>&, const std::string&);
template Tensor<double> raise_lower(const Tensor<double>&, int, const Tensor<double>&);
template Tensor<DiffScalar> raise_lower(const Tensor<DiffScalar>&, int, const Tensor<DiffScalar>&);

}  // namespace jetplasma
