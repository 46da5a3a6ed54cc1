#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "signa/diffcore/error.hpp"
#include "signa/graph/graph.hpp"

namespace signa {

/// Counts use unit-width bins 0..49 plus a 50+ overflow bin; ratios use 20
/// uniform bins on [0, 1] (a ratio of exactly 1 falls in the last bin).
inline constexpr std::size_t kCountHistogramBins = 51;
inline constexpr std::size_t kRatioHistogramBins = 20;

struct HomophilyReport {
  double global_ratio = 0.0;
  std::vector<std::size_t> local_counts;
  /// NaN for isolated nodes.
  std::vector<double> local_ratios;
  std::vector<std::size_t> count_histogram;
  std::vector<std::size_t> ratio_histogram;
  std::size_t isolated_nodes = 0;
};

inline bool is_undefined_ratio(double r) { return std::isnan(r); }

/// Fraction of undirected edges whose endpoints share a label.
inline double global_homophily(const Graph& g) {
  if (!g.has_labels()) throw AnalysisError("global homophily needs labels");
  if (g.num_edges() == 0) throw AnalysisError("global homophily is undefined on a graph without edges");
  const auto& y = g.labels();
  std::size_t same = 0;
  for (const auto& [u, v] : g.edges()) same += y[u] == y[v];
  return static_cast<double>(same) / static_cast<double>(g.num_edges());
}

inline HomophilyReport local_homophily(const Graph& g) {
  if (!g.has_labels()) throw AnalysisError("local homophily needs labels");
  const auto& y = g.labels();
  const std::size_t n = g.num_nodes();
  HomophilyReport r;
  r.local_counts.assign(n, 0);
  r.local_ratios.assign(n, std::numeric_limits<double>::quiet_NaN());
  r.count_histogram.assign(kCountHistogramBins, 0);
  r.ratio_histogram.assign(kRatioHistogramBins, 0);
  std::size_t total_same = 0;
  for (std::size_t u = 0; u < n; ++u) {
    std::size_t same = 0;
    for (auto v : g.neighbors(u)) same += y[u] == y[v];
    r.local_counts[u] = same;
    total_same += same;
    if (g.degree(u) == 0) {
      ++r.isolated_nodes;
      continue;
    }
    r.local_ratios[u] = static_cast<double>(same) / static_cast<double>(g.degree(u));
    ++r.count_histogram[std::min(same, kCountHistogramBins - 1)];
    const auto bin = std::min(static_cast<std::size_t>(r.local_ratios[u] * kRatioHistogramBins), kRatioHistogramBins - 1);
    ++r.ratio_histogram[bin];
  }
  r.global_ratio = g.num_edges() == 0
                       ? std::numeric_limits<double>::quiet_NaN()
                       : static_cast<double>(total_same) / static_cast<double>(2 * g.num_edges());
  return r;
}

}  // namespace signa
