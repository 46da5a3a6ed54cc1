#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "signa/diffcore/error.hpp"
#include "signa/diffcore/rng.hpp"
#include "signa/graph/graph.hpp"

namespace signa {

struct SbmSpec {
  std::vector<std::size_t> block_sizes;
  double p_in = 0.0;
  double p_out = 0.0;
  /// One mean vector per block; all the same length F.
  std::vector<std::vector<double>> feature_means;
  double noise_sigma = 1.0;
};

/// Stochastic block model with Gaussian node features around the block mean.
/// Node ids are assigned block by block; labels are block indices. Every pair
/// u < v is visited once in row-major order and kept with probability p_in
/// (same block) or p_out, then features are drawn node by node.
inline Graph sbm_generate(const SbmSpec& spec, RngStream& rng) {
  if (!(spec.p_out >= 0.0 && spec.p_out <= spec.p_in && spec.p_in <= 1.0))
    throw InvalidArgument("SBM probabilities must satisfy 0 <= p_out <= p_in <= 1");
  if (spec.block_sizes.empty()) throw InvalidArgument("SBM needs at least one block");
  if (spec.feature_means.size() != spec.block_sizes.size())
    throw InvalidArgument("SBM needs one feature mean per block");
  const std::size_t dim = spec.feature_means.front().size();
  if (dim == 0) throw InvalidArgument("SBM feature means must be non-empty");
  for (const auto& m : spec.feature_means)
    if (m.size() != dim) throw InvalidArgument("SBM feature means differ in length");
  if (!(spec.noise_sigma >= 0.0)) throw InvalidArgument("SBM noise sigma must be non-negative");

  const std::size_t n = std::accumulate(spec.block_sizes.begin(), spec.block_sizes.end(), std::size_t{0});
  if (n == 0) throw InvalidArgument("SBM blocks are all empty");
  std::vector<int> block(n);
  {
    std::size_t u = 0;
    for (std::size_t b = 0; b < spec.block_sizes.size(); ++b)
      for (std::size_t k = 0; k < spec.block_sizes[b]; ++k) block[u++] = static_cast<int>(b);
  }
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (rng.bernoulli(block[u] == block[v] ? spec.p_in : spec.p_out)) edges.emplace_back(u, v);

  Tensor features(Shape{n, dim});
  for (std::size_t u = 0; u < n; ++u) {
    const auto& mean = spec.feature_means[static_cast<std::size_t>(block[u])];
    for (std::size_t c = 0; c < dim; ++c) features(u, c) = rng.normal(mean[c], spec.noise_sigma);
  }
  return Graph::from_edges(n, edges, std::move(features), std::move(block));
}

/// Block means whose pairwise Euclidean distance is exactly `separation`.
/// Two blocks sit at +-(separation / 2) along (1, ..., 1) / sqrt(dim).
inline std::vector<std::vector<double>> separated_means(std::size_t blocks, std::size_t dim, double separation) {
  std::vector<std::vector<double>> means(blocks, std::vector<double>(dim, 0.0));
  if (blocks == 2) {
    const double offset = separation / 2.0 / std::sqrt(static_cast<double>(dim));
    for (std::size_t c = 0; c < dim; ++c) {
      means[0][c] = -offset;
      means[1][c] = offset;
    }
    return means;
  }
  // One-hot directions scaled so every pair of means is `separation` apart.
  if (blocks > dim) throw InvalidArgument("separated_means needs dim >= blocks for more than two blocks");
  for (std::size_t b = 0; b < blocks; ++b) means[b][b] = separation / std::sqrt(2.0);
  return means;
}

}  // namespace signa
