#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "signa/diffcore/error.hpp"

namespace signa {

/// Joint counts of (cluster, class) over items, with marginals.
struct Contingency {
  std::map<std::pair<int, int>, std::size_t> joint;
  std::map<int, std::size_t> clusters;
  std::map<int, std::size_t> classes;
  std::size_t n = 0;
};

inline Contingency contingency(std::span<const int> assignments, std::span<const int> labels) {
  if (assignments.size() != labels.size()) throw InvalidArgument("assignments and labels differ in length");
  if (assignments.empty()) throw InvalidArgument("clustering metrics need at least one item");
  Contingency t;
  t.n = labels.size();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++t.joint[{assignments[i], labels[i]}];
    ++t.clusters[assignments[i]];
    ++t.classes[labels[i]];
  }
  return t;
}

namespace metrics_detail {

inline double entropy(const std::map<int, std::size_t>& counts, std::size_t n) {
  double h = 0.0;
  for (const auto& [_, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    h -= p * std::log(p);
  }
  return h;
}

inline double mutual_information(const Contingency& t) {
  const double n = static_cast<double>(t.n);
  double mi = 0.0;
  for (const auto& [key, c] : t.joint) {
    const double nij = static_cast<double>(c);
    const double a = static_cast<double>(t.clusters.at(key.first));
    const double b = static_cast<double>(t.classes.at(key.second));
    mi += nij / n * std::log(n * nij / (a * b));
  }
  return std::max(mi, 0.0);
}

}  // namespace metrics_detail

/// Mutual information normalized by the arithmetic mean of the two entropies
/// (natural log). Two single-cell partitions score 1.
inline double nmi(std::span<const int> assignments, std::span<const int> labels) {
  const auto t = contingency(assignments, labels);
  const double hk = metrics_detail::entropy(t.clusters, t.n);
  const double hc = metrics_detail::entropy(t.classes, t.n);
  if (t.clusters.size() == 1 && t.classes.size() == 1) return 1.0;
  if (t.clusters.size() == 1 || t.classes.size() == 1) return 0.0;
  // Identical partitions up to relabeling: report exactly 1.
  if (t.joint.size() == t.clusters.size() && t.joint.size() == t.classes.size()) return 1.0;
  const double mi = metrics_detail::mutual_information(t);
  return std::clamp(mi / ((hk + hc) / 2.0), 0.0, 1.0);
}

/// 1 - H(C|K) / H(C); 1 when there is a single class.
inline double homogeneity(std::span<const int> assignments, std::span<const int> labels) {
  const auto t = contingency(assignments, labels);
  const double hc = metrics_detail::entropy(t.classes, t.n);
  if (t.classes.size() == 1) return 1.0;
  // Every cluster label-pure.
  if (t.joint.size() == t.clusters.size()) return 1.0;
  const double n = static_cast<double>(t.n);
  double h_c_given_k = 0.0;
  for (const auto& [key, c] : t.joint) {
    const double nij = static_cast<double>(c);
    h_c_given_k -= nij / n * std::log(nij / static_cast<double>(t.clusters.at(key.first)));
  }
  return std::clamp(1.0 - h_c_given_k / hc, 0.0, 1.0);
}

inline double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw InvalidArgument("predictions and labels differ in length");
  if (truth.empty()) throw InvalidArgument("accuracy of an empty set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i];
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

/// Micro-averaged F1 from pooled per-class TP/FP/FN.
inline double micro_f1(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw InvalidArgument("predictions and labels differ in length");
  if (truth.empty()) throw InvalidArgument("micro-F1 of an empty set");
  std::map<int, std::size_t> tp, fp, fn;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == truth[i]) {
      ++tp[truth[i]];
    } else {
      ++fp[predicted[i]];
      ++fn[truth[i]];
    }
  }
  std::size_t TP = 0, FP = 0, FN = 0;
  for (const auto& [_, c] : tp) TP += c;
  for (const auto& [_, c] : fp) FP += c;
  for (const auto& [_, c] : fn) FN += c;
  const std::size_t denom = 2 * TP + FP + FN;
  return denom == 0 ? 0.0 : static_cast<double>(2 * TP) / static_cast<double>(denom);
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Population standard deviation.
inline MeanStd mean_std(std::span<const double> xs) {
  MeanStd r;
  if (xs.empty()) return r;
  for (auto x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (auto x : xs) ss += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return r;
}

}  // namespace signa
