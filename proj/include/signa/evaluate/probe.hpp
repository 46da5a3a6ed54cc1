#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iostream>
#include <set>
#include <span>
#include <vector>

#include "signa/diffcore/adam.hpp"
#include "signa/diffcore/error.hpp"
#include "signa/diffcore/rng.hpp"
#include "signa/diffcore/tensor.hpp"
#include "signa/evaluate/metrics.hpp"

namespace signa {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  std::size_t run = 0;

  bool operator==(const Split&) const = default;
};

struct SplitRatios {
  double train = 0.1;
  double val = 0.1;
  double test = 0.8;
};

/// `num_runs` random splits over nodes 0..n-1. Run r shuffles with the split
/// stream forked at index r; train/val sizes are round(n * ratio) and the test
/// set takes the rest.
inline std::vector<Split> make_splits(std::size_t num_nodes, const SplitRatios& ratios, std::size_t num_runs,
                                      std::uint64_t seed) {
  const double total = ratios.train + ratios.val + ratios.test;
  if (std::abs(total - 1.0) > 1e-9 || ratios.train < 0 || ratios.val < 0 || ratios.test < 0)
    throw InvalidArgument("split ratios must be non-negative and sum to 1");
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(num_nodes) * ratios.train));
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(num_nodes) * ratios.val));
  if (n_train == 0 || n_train + n_val >= num_nodes || (ratios.val > 0 && n_val == 0))
    throw InvalidArgument("too few labeled nodes (" + std::to_string(num_nodes) + ") for the requested split ratios");
  const RngStream base(seed, RngPurpose::split);
  std::vector<Split> out;
  out.reserve(num_runs);
  for (std::size_t r = 0; r < num_runs; ++r) {
    std::vector<std::size_t> perm(num_nodes);
    for (std::size_t i = 0; i < num_nodes; ++i) perm[i] = i;
    auto rng = base.fork(r);
    rng.shuffle(perm.begin(), perm.end());
    Split s;
    s.seed = seed;
    s.run = r;
    s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                 perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
    out.push_back(std::move(s));
  }
  return out;
}

struct ProbeConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 300;
  double weight_decay = 1e-4;
};

struct ProbeResult {
  double micro_f1 = 0.0;
  double accuracy = 0.0;
  double val_micro_f1 = 0.0;
  std::size_t best_epoch = 0;
  std::vector<std::size_t> classes_missing_from_train;
};

namespace probe_detail {

inline std::vector<int> predict(const Tensor& x, std::span<const std::size_t> rows, const Tensor& w, const Tensor& b) {
  const std::size_t d = x.cols(), c = w.cols();
  std::vector<int> out;
  out.reserve(rows.size());
  std::vector<double> logits(c);
  for (auto r : rows) {
    for (std::size_t k = 0; k < c; ++k) logits[k] = b[k];
    for (std::size_t j = 0; j < d; ++j) {
      const double xj = x(r, j);
      for (std::size_t k = 0; k < c; ++k) logits[k] += xj * w(j, k);
    }
    out.push_back(static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin()));
  }
  return out;
}

inline std::vector<int> gather(std::span<const int> labels, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(labels[r]);
  return out;
}

}  // namespace probe_detail

/// Multinomial logistic regression (softmax + cross-entropy) on frozen
/// embeddings, trained full-batch with Adam from zero weights. The epoch with
/// the best validation micro-F1 (earliest on ties) decides the test metrics.
inline ProbeResult linear_probe(const Tensor& embeddings, std::span<const int> labels, const Split& split,
                                const ProbeConfig& config = {}, std::size_t num_classes = 0,
                                std::ostream* warn = nullptr) {
  embeddings.require_matrix("linear_probe");
  if (labels.size() != embeddings.rows()) throw InvalidArgument("label count does not match embedding rows");
  if (split.train.empty() || split.test.empty()) throw InvalidArgument("probe split needs train and test nodes");
  for (auto l : labels)
    if (l < 0) throw InvalidArgument("negative label");
  if (num_classes == 0) num_classes = static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
  const std::size_t d = embeddings.cols(), c = num_classes;

  ProbeResult result;
  {
    std::set<int> seen;
    for (auto r : split.train) seen.insert(labels[r]);
    for (std::size_t k = 0; k < c; ++k)
      if (!seen.count(static_cast<int>(k))) result.classes_missing_from_train.push_back(k);
    if (!result.classes_missing_from_train.empty() && warn)
      *warn << "warning: " << result.classes_missing_from_train.size()
            << " class(es) absent from the probe training split\n";
  }

  Parameter w("probe.weight", Tensor(Shape{d, c}));
  Parameter b("probe.bias", Tensor(Shape{c}));
  Adam adam({&w, &b}, {config.learning_rate, config.weight_decay});

  const auto& val_rows = split.val.empty() ? split.train : split.val;
  const auto val_truth = probe_detail::gather(labels, val_rows);
  const auto test_truth = probe_detail::gather(labels, split.test);
  const double inv_n = 1.0 / static_cast<double>(split.train.size());
  std::vector<double> logits(c);
  bool have_best = false;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (auto r : split.train) {
      for (std::size_t k = 0; k < c; ++k) logits[k] = b.value[k];
      for (std::size_t j = 0; j < d; ++j) {
        const double xj = embeddings(r, j);
        for (std::size_t k = 0; k < c; ++k) logits[k] += xj * w.value(j, k);
      }
      const double mx = *std::max_element(logits.begin(), logits.end());
      double z = 0.0;
      for (auto& l : logits) {
        l = std::exp(l - mx);
        z += l;
      }
      for (std::size_t k = 0; k < c; ++k) {
        const double g = (logits[k] / z - (labels[r] == static_cast<int>(k) ? 1.0 : 0.0)) * inv_n;
        b.grad[k] += g;
        for (std::size_t j = 0; j < d; ++j) w.grad(j, k) += embeddings(r, j) * g;
      }
    }
    adam.step();

    const auto val_pred = probe_detail::predict(embeddings, val_rows, w.value, b.value);
    const double val_f1 = micro_f1(val_pred, val_truth);
    if (!have_best || val_f1 > result.val_micro_f1) {
      have_best = true;
      result.val_micro_f1 = val_f1;
      result.best_epoch = epoch;
      const auto test_pred = probe_detail::predict(embeddings, split.test, w.value, b.value);
      result.micro_f1 = micro_f1(test_pred, test_truth);
      result.accuracy = accuracy(test_pred, test_truth);
    }
  }
  return result;
}

}  // namespace signa
