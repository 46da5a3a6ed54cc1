#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "signa/diffcore/error.hpp"
#include "signa/diffcore/tensor.hpp"

namespace signa {

using Edge = std::pair<std::size_t, std::size_t>;

/// Immutable undirected, unweighted graph in CSR form with node features and
/// optional class labels. Adjacency is symmetric, loop-free and duplicate-free.
class Graph {
 public:
  struct BuildStats {
    std::size_t self_loops_dropped = 0;
    std::size_t duplicates_merged = 0;
  };

  Graph() = default;

  /// Symmetrizes `edges`, drops self-loops and merges duplicates.
  static Graph from_edges(std::size_t num_nodes, std::span<const Edge> edges, Tensor features,
                          std::optional<std::vector<int>> labels = std::nullopt, BuildStats* stats = nullptr) {
    features.require_matrix("graph features");
    if (features.rows() != num_nodes)
      throw IngestionError("feature matrix has " + std::to_string(features.rows()) + " rows but graph has " +
                           std::to_string(num_nodes) + " nodes");
    Graph g;
    g.features_ = std::move(features);
    BuildStats local;
    std::vector<std::vector<std::size_t>> adj(num_nodes);
    for (const auto& [u, v] : edges) {
      if (u >= num_nodes || v >= num_nodes)
        throw IngestionError("edge (" + std::to_string(u) + ", " + std::to_string(v) + ") references a node >= " +
                             std::to_string(num_nodes));
      if (u == v) {
        ++local.self_loops_dropped;
        continue;
      }
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
    g.offsets_.assign(num_nodes + 1, 0);
    std::size_t directed_raw = 0;
    for (std::size_t u = 0; u < num_nodes; ++u) {
      auto& row = adj[u];
      directed_raw += row.size();
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
      g.offsets_[u + 1] = g.offsets_[u] + row.size();
    }
    g.targets_.reserve(g.offsets_.back());
    for (const auto& row : adj) g.targets_.insert(g.targets_.end(), row.begin(), row.end());
    local.duplicates_merged = (directed_raw - g.targets_.size()) / 2;
    if (labels) g.set_labels(std::move(*labels));
    if (stats) *stats = local;
    return g;
  }

  std::size_t num_nodes() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const noexcept { return targets_.size() / 2; }
  std::size_t num_features() const { return features_.cols(); }

  std::span<const std::size_t> neighbors(std::size_t u) const {
    return std::span<const std::size_t>(targets_).subspan(offsets_[u], offsets_[u + 1] - offsets_[u]);
  }
  std::size_t degree(std::size_t u) const { return offsets_[u + 1] - offsets_[u]; }
  bool has_edge(std::size_t u, std::size_t v) const {
    const auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
  }

  std::span<const std::size_t> csr_offsets() const noexcept { return offsets_; }
  std::span<const std::size_t> csr_targets() const noexcept { return targets_; }

  const Tensor& features() const noexcept { return features_; }

  bool has_labels() const noexcept { return labels_.has_value(); }
  const std::vector<int>& labels() const {
    if (!labels_) throw AnalysisError("graph has no labels");
    return *labels_;
  }
  std::size_t num_classes() const noexcept { return num_classes_; }

  /// Undirected edge list with u < v, in CSR order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(num_edges());
    for (std::size_t u = 0; u < num_nodes(); ++u)
      for (auto v : neighbors(u))
        if (u < v) out.emplace_back(u, v);
    return out;
  }

  Graph with_features(Tensor features) const {
    Graph g = *this;
    features.require_matrix("graph features");
    if (features.rows() != num_nodes()) throw DimensionError("replacement features have the wrong row count");
    g.features_ = std::move(features);
    return g;
  }

 private:
  void set_labels(std::vector<int> labels) {
    if (labels.size() != num_nodes())
      throw IngestionError("label count " + std::to_string(labels.size()) + " does not match node count " +
                           std::to_string(num_nodes()));
    int max_label = -1;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0) throw IngestionError("negative label at node " + std::to_string(i));
      max_label = std::max(max_label, labels[i]);
    }
    num_classes_ = static_cast<std::size_t>(max_label + 1);
    labels_ = std::move(labels);
  }

  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> targets_;
  Tensor features_;
  std::optional<std::vector<int>> labels_;
  std::size_t num_classes_ = 0;
};

}  // namespace signa
