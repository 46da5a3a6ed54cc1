#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "signa/diffcore/error.hpp"
#include "signa/graph/graph.hpp"

namespace signa {

namespace io_detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

inline std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path.string() + "'");
  return in;
}

template <typename Number>
bool parse_number(std::string_view token, Number& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace io_detail

struct EdgeList {
  std::vector<Edge> edges;
  std::size_t max_node_id = 0;
  bool empty() const noexcept { return edges.empty(); }
};

/// One edge per line as two whitespace-separated non-negative integers;
/// '#' starts a comment line, blank lines are skipped.
inline EdgeList read_edge_list(const std::filesystem::path& path) {
  auto in = io_detail::open(path);
  EdgeList out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = io_detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto tokens = io_detail::split_ws(s);
    if (tokens.size() != 2) throw IngestionError(path.string(), lineno, "expected two node ids");
    std::size_t ids[2];
    for (int k = 0; k < 2; ++k)
      if (!io_detail::parse_number(tokens[k], ids[k]))
        throw IngestionError(path.string(), lineno, "node id '" + std::string(tokens[k]) + "' is not a non-negative integer");
    out.edges.emplace_back(ids[0], ids[1]);
    out.max_node_id = std::max({out.max_node_id, ids[0], ids[1]});
  }
  return out;
}

/// CSV of floats, one node per row; all rows must have the same width.
inline Tensor read_features_csv(const std::filesystem::path& path, bool skip_header = false) {
  auto in = io_detail::open(path);
  std::vector<double> data;
  std::size_t cols = 0, rows = 0, lineno = 0;
  std::string line;
  bool header_pending = skip_header;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = io_detail::trim(line);
    if (s.empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::size_t width = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = s.find(',', start);
      const auto token = io_detail::trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
      double v = 0.0;
      if (!io_detail::parse_number(token, v))
        throw IngestionError(path.string(), lineno, "'" + std::string(token) + "' is not a number");
      data.push_back(v);
      ++width;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) cols = width;
    else if (width != cols)
      throw IngestionError(path.string(), lineno,
                           "ragged feature row: " + std::to_string(width) + " values, expected " + std::to_string(cols));
    ++rows;
  }
  if (rows == 0) throw IngestionError(path.string(), lineno, "feature file has no rows");
  return Tensor(Shape{rows, cols}, std::move(data));
}

/// One integer class index per line.
inline std::vector<int> read_labels(const std::filesystem::path& path) {
  auto in = io_detail::open(path);
  std::vector<int> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = io_detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    int v = 0;
    if (!io_detail::parse_number(s, v) || v < 0)
      throw IngestionError(path.string(), lineno, "label '" + std::string(s) + "' is not a non-negative integer");
    out.push_back(v);
  }
  return out;
}

struct LoadOptions {
  bool features_have_header = false;
  bool quiet = false;
};

/// Node count is the feature row count; every edge endpoint and the label
/// count must agree with it.
inline Graph load_graph(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                        const std::optional<std::filesystem::path>& label_path = std::nullopt,
                        const LoadOptions& options = {}, Graph::BuildStats* stats_out = nullptr) {
  const auto edges = read_edge_list(edge_path);
  auto features = read_features_csv(feature_path, options.features_have_header);
  const std::size_t n = features.rows();
  if (!edges.empty() && edges.max_node_id >= n)
    throw IngestionError(edge_path.string() + ": node id " + std::to_string(edges.max_node_id) +
                         " out of range for " + std::to_string(n) + " feature rows");
  std::optional<std::vector<int>> labels;
  if (label_path) {
    labels = read_labels(*label_path);
    if (labels->size() != n)
      throw IngestionError(label_path->string() + ": " + std::to_string(labels->size()) + " labels for " +
                           std::to_string(n) + " nodes");
  }
  Graph::BuildStats stats;
  auto g = Graph::from_edges(n, edges.edges, std::move(features), std::move(labels), &stats);
  if (stats.self_loops_dropped > 0 && !options.quiet)
    std::cerr << "warning: dropped " << stats.self_loops_dropped << " self-loop(s) from " << edge_path.string() << '\n';
  if (stats_out) *stats_out = stats;
  return g;
}

}  // namespace signa
