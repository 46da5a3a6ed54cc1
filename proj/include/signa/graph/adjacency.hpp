#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "signa/diffcore/tape.hpp"
#include "signa/graph/graph.hpp"

namespace signa {

/// Symmetric GCN propagation matrix D^-1/2 (A + I) D^-1/2 in CSR form, where
/// D is the degree matrix of A + I. Row u holds its neighbors and itself,
/// sorted by column.
template <std::floating_point Real>
class BasicNormalizedAdjacency {
 public:
  explicit BasicNormalizedAdjacency(const Graph& g) {
    const std::size_t n = g.num_nodes();
    std::vector<double> inv_sqrt_deg(n);
    for (std::size_t u = 0; u < n; ++u) inv_sqrt_deg[u] = 1.0 / std::sqrt(static_cast<double>(g.degree(u) + 1));
    offsets_.assign(n + 1, 0);
    cols_.reserve(2 * g.num_edges() + n);
    values_.reserve(2 * g.num_edges() + n);
    for (std::size_t u = 0; u < n; ++u) {
      bool self_done = false;
      auto emit = [&](std::size_t v) {
        cols_.push_back(v);
        values_.push_back(static_cast<Real>(inv_sqrt_deg[u] * inv_sqrt_deg[v]));
      };
      for (auto v : g.neighbors(u)) {
        if (!self_done && v > u) {
          emit(u);
          self_done = true;
        }
        emit(v);
      }
      if (!self_done) emit(u);
      offsets_[u + 1] = cols_.size();
    }
  }

  std::size_t num_nodes() const noexcept { return offsets_.size() - 1; }
  std::size_t nnz() const noexcept { return cols_.size(); }
  const std::vector<std::size_t>& offsets() const noexcept { return offsets_; }
  const std::vector<std::size_t>& cols() const noexcept { return cols_; }
  const std::vector<Real>& values() const noexcept { return values_; }

  BasicTensor<Real> to_dense() const {
    const std::size_t n = num_nodes();
    BasicTensor<Real> out(Shape{n, n});
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t k = offsets_[u]; k < offsets_[u + 1]; ++k) out(u, cols_[k]) = values_[k];
    return out;
  }

  /// out += this * x
  void multiply_acc(const BasicTensor<Real>& x, BasicTensor<Real>& out) const {
    const std::size_t d = x.cols();
    for (std::size_t u = 0; u < num_nodes(); ++u) {
      auto orow = out.row(u);
      for (std::size_t k = offsets_[u]; k < offsets_[u + 1]; ++k) {
        const Real w = values_[k];
        const auto xrow = x.row(cols_[k]);
        for (std::size_t c = 0; c < d; ++c) orow[c] += w * xrow[c];
      }
    }
  }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> cols_;
  std::vector<Real> values_;
};

using NormalizedAdjacency = BasicNormalizedAdjacency<double>;

template <std::floating_point Real>
BasicNormalizedAdjacency<Real> normalized_adjacency(const Graph& g) {
  return BasicNormalizedAdjacency<Real>(g);
}

inline NormalizedAdjacency normalized_adjacency(const Graph& g) { return NormalizedAdjacency(g); }

namespace ad {

/// Sparse-dense product adj * x. The adjacency is symmetric, so the backward
/// pass is the same product applied to the output gradient.
template <std::floating_point Real>
Var<Real> spmm(const BasicNormalizedAdjacency<Real>& adj, const Var<Real>& x) {
  const auto& xv = x.value();
  xv.require_matrix("spmm");
  if (xv.rows() != adj.num_nodes())
    throw DimensionError("spmm: adjacency over " + std::to_string(adj.num_nodes()) + " nodes vs input " +
                         to_string(xv.shape()));
  BasicTensor<Real> out(xv.shape());
  adj.multiply_acc(xv, out);
  const auto xi = x.id();
  const auto* a = &adj;
  return x.tape().record(std::move(out), x.requires_grad(),
                         [xi, a](Tape<Real>& t, std::size_t self) { a->multiply_acc(t.grad(self), t.grad(xi)); },
                         "spmm");
}

}  // namespace ad

}  // namespace signa
