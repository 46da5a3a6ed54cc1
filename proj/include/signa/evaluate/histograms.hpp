#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include "signa/diffcore/error.hpp"
#include "signa/diffcore/rng.hpp"
#include "signa/diffcore/tensor.hpp"
#include "signa/graph/graph.hpp"

namespace signa {

inline constexpr std::size_t kMaxFullPairNodes = 5000;

struct SimilarityHistogramOptions {
  std::size_t bins = 20;
  /// Required (> 0) above 5000 nodes: number of uniformly sampled pairs.
  std::size_t sample_pairs = 0;
  std::uint64_t seed = 0;
};

/// Cosine-similarity counts over [-1, 1] split by neighbor/non-neighbor and,
/// when labels exist, same/different label.
struct SimilarityHistogram {
  std::vector<double> edges;
  std::vector<std::size_t> neighbor, non_neighbor, same_label, different_label;
  bool has_labels = false;
  std::size_t pairs = 0;

  void write_csv(std::ostream& out) const {
    out << "bin_lo,bin_hi,neighbor,non_neighbor";
    if (has_labels) out << ",same_label,different_label";
    out << '\n';
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
      out << edges[b] << ',' << edges[b + 1] << ',' << neighbor[b] << ',' << non_neighbor[b];
      if (has_labels) out << ',' << same_label[b] << ',' << different_label[b];
      out << '\n';
    }
  }
};

inline SimilarityHistogram similarity_histograms(const Tensor& embeddings, const Graph& g,
                                                 const SimilarityHistogramOptions& options = {}) {
  embeddings.require_matrix("similarity_histograms");
  const std::size_t n = embeddings.rows();
  if (n != g.num_nodes()) throw DimensionError("embedding rows do not match graph nodes");
  if (options.bins == 0) throw InvalidArgument("histogram needs at least one bin");
  if (n > kMaxFullPairNodes && options.sample_pairs == 0)
    throw InvalidArgument("more than 5000 nodes: set a pair-subsampling count");

  std::vector<double> norms(n);
  for (std::size_t u = 0; u < n; ++u) {
    double s = 0.0;
    for (auto v : embeddings.row(u)) s += v * v;
    norms[u] = std::sqrt(s);
    if (norms[u] < 1e-12) throw DegenerateEmbedding(u, "zero embedding");
  }

  SimilarityHistogram h;
  h.has_labels = g.has_labels();
  const std::size_t bins = options.bins;
  for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(-1.0 + 2.0 * static_cast<double>(b) / static_cast<double>(bins));
  h.neighbor.assign(bins, 0);
  h.non_neighbor.assign(bins, 0);
  h.same_label.assign(bins, 0);
  h.different_label.assign(bins, 0);

  auto add_pair = [&](std::size_t u, std::size_t v) {
    double dot = 0.0;
    const auto a = embeddings.row(u), b = embeddings.row(v);
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    const double cos = std::clamp(dot / (norms[u] * norms[v]), -1.0, 1.0);
    const auto bin = std::min(static_cast<std::size_t>((cos + 1.0) / 2.0 * static_cast<double>(bins)), bins - 1);
    (g.has_edge(u, v) ? h.neighbor : h.non_neighbor)[bin]++;
    if (h.has_labels) (g.labels()[u] == g.labels()[v] ? h.same_label : h.different_label)[bin]++;
    ++h.pairs;
  };

  if (options.sample_pairs == 0) {
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = u + 1; v < n; ++v) add_pair(u, v);
  } else {
    RngStream rng(options.seed, RngPurpose::probe);
    for (std::size_t s = 0; s < options.sample_pairs; ++s) {
      std::size_t u, v;
      do {
        u = static_cast<std::size_t>(rng.below(n));
        v = static_cast<std::size_t>(rng.below(n));
      } while (u == v);
      add_pair(std::min(u, v), std::max(u, v));
    }
  }
  return h;
}

}  // namespace signa
