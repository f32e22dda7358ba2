#include "jetplasma/covariant.hpp"

#include "jetplasma/errors.hpp"

namespace jetplasma {

namespace {

RealTensor make_like(const std::vector<int>& extents, const std::vector<Slot>& slots) {
  if (extents.empty()) return RealTensor::scalar(0.0);
  return RealTensor(extents, slots);
}

}  // namespace

RealTensor gradient(const DiffTensor& t, std::span<const int> vars, Slot slot) {
  auto extents = t.extents();
  auto slots = t.slots();
  extents.push_back(static_cast<int>(vars.size()));
  slots.push_back(slot);
  RealTensor out(extents, slots);
  const std::size_t d = vars.size();
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) out.data()[i * d + k] = t.data()[i].d(vars[k]);
  }
  return out;
}

RealTensor gradient(const DiffScalar& s, std::span<const int> vars, Slot slot) {
  RealTensor out({static_cast<int>(vars.size())}, {slot});
  for (std::size_t k = 0; k < vars.size(); ++k) out.data()[k] = s.d(vars[k]);
  return out;
}

RealTensor covariant_derivative(const RealTensor& value, const RealTensor& partial, ConnectionBlocks blocks) {
  const int rank = value.rank();
  if (partial.rank() != rank + 1) throw ShapeError("covariant_derivative: partial must carry one extra slot");
  for (int s = 0; s < rank; ++s) {
    if (partial.extent(s) != value.extent(s) || !(partial.slot(s) == value.slot(s))) {
      throw ShapeError("covariant_derivative: partial does not match the value's valence");
    }
  }
  const int ndirs = partial.extent(rank);
  for (const RealTensor* blk : {blocks.latin, blocks.greek}) {
    if (blk && (blk->rank() != 3 || blk->extent(2) != ndirs)) {
      throw ShapeError("covariant_derivative: connection block has the wrong shape");
    }
  }
  RealTensor out = partial;
  std::vector<int> idx(static_cast<std::size_t>(rank + 1));
  std::vector<int> src(static_cast<std::size_t>(rank));
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out.unravel(flat, idx);
    const int d = idx[static_cast<std::size_t>(rank)];
    double acc = 0.0;
    for (int s = 0; s < rank; ++s) {
      const Slot& slot = value.slot(s);
      const RealTensor* blk = slot.kind == IndexKind::Latin ? blocks.latin : blocks.greek;
      if (!blk) continue;
      if (blk->extent(0) != value.extent(s)) throw ShapeError("covariant_derivative: block dimension mismatch");
      std::copy(idx.begin(), idx.begin() + rank, src.begin());
      const int a = idx[static_cast<std::size_t>(s)];
      for (int m = 0; m < value.extent(s); ++m) {
        src[static_cast<std::size_t>(s)] = m;
        if (slot.variance == Variance::Up) {
          acc += (*blk)(a, m, d) * value.at(src);
        } else {
          acc -= (*blk)(m, a, d) * value.at(src);
        }
      }
    }
    out.data()[flat] += acc;
  }
  return out;
}

RealTensor christoffel_form(const RealTensor& ginv, const RealTensor& dg) {
  const int n = ginv.extent(0);
  const IndexKind kind = ginv.slot(0).kind;
  RealTensor out({n, n, n}, {Slot{kind, Variance::Up}, Slot{kind, Variance::Down}, Slot{kind, Variance::Down}});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = j; k < n; ++k) {
        double acc = 0.0;
        for (int m = 0; m < n; ++m) acc += ginv(i, m) * (dg(j, m, k) + dg(k, m, j) - dg(j, k, m));
        out(i, j, k) = 0.5 * acc;
        out(i, k, j) = 0.5 * acc;
      }
    }
  }
  return out;
}

RealTensor trace(const RealTensor& t, int a, int b) {
  if (a == b || t.extent(a) != t.extent(b)) throw ShapeError("trace over incompatible slots");
  std::vector<int> extents;
  std::vector<Slot> slots;
  for (int s = 0; s < t.rank(); ++s) {
    if (s == a || s == b) continue;
    extents.push_back(t.extent(s));
    slots.push_back(t.slot(s));
  }
  RealTensor out = make_like(extents, slots);
  std::vector<int> oidx(extents.size());
  std::vector<int> idx(static_cast<std::size_t>(t.rank()));
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    if (!extents.empty()) out.unravel(flat, oidx);
    std::size_t o = 0;
    for (int s = 0; s < t.rank(); ++s) {
      if (s == a || s == b) continue;
      idx[static_cast<std::size_t>(s)] = oidx[o++];
    }
    double acc = 0.0;
    for (int m = 0; m < t.extent(a); ++m) {
      idx[static_cast<std::size_t>(a)] = m;
      idx[static_cast<std::size_t>(b)] = m;
      acc += t.at(idx);
    }
    out.data()[flat] = acc;
  }
  return out;
}

RealTensor outer(const RealTensor& a, const RealTensor& b) {
  auto extents = a.extents();
  auto slots = a.slots();
  extents.insert(extents.end(), b.extents().begin(), b.extents().end());
  slots.insert(slots.end(), b.slots().begin(), b.slots().end());
  RealTensor out = make_like(extents, slots);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out.data()[i * b.size() + j] = a.data()[i] * b.data()[j];
  }
  return out;
}

RealTensor axpy(const RealTensor& a, double s, const RealTensor& b) {
  if (a.extents() != b.extents()) throw ShapeError("axpy on tensors of different shape");
  RealTensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += s * b.data()[i];
  return out;
}

std::vector<int> index_range(int first, int count) {
  std::vector<int> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = first + i;
  return v;
}

}  // namespace jetplasma
