#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "signa/diffcore/error.hpp"
#include "signa/diffcore/rng.hpp"
#include "signa/diffcore/tensor.hpp"
#include "signa/evaluate/kmeans.hpp"
#include "signa/evaluate/metrics.hpp"
#include "signa/evaluate/probe.hpp"
#include "signa/evaluate/timing.hpp"

namespace signa {

struct ClassificationSummary {
  std::vector<ProbeResult> runs;
  MeanStd micro_f1;
  MeanStd accuracy;
};

struct ClusteringSummary {
  double nmi = 0.0;
  double homogeneity = 0.0;
  std::size_t k = 0;
  double inertia = 0.0;
};

/// Runs the probe on every split. With threads > 1 the splits are spread over
/// worker threads; each result depends only on its split, so the output does
/// not depend on the thread count.
inline ClassificationSummary classify(const Tensor& embeddings, std::span<const int> labels,
                                      const std::vector<Split>& splits, const ProbeConfig& config = {},
                                      std::size_t num_classes = 0, std::size_t threads = 1,
                                      std::ostream* warn = nullptr) {
  ClassificationSummary s;
  s.runs.resize(splits.size());
  threads = std::max<std::size_t>(1, std::min(threads, splits.size()));
  if (threads == 1) {
    for (std::size_t r = 0; r < splits.size(); ++r)
      s.runs[r] = linear_probe(embeddings, labels, splits[r], config, num_classes, r == 0 ? warn : nullptr);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t r = t; r < splits.size(); r += threads)
            s.runs[r] = linear_probe(embeddings, labels, splits[r], config, num_classes);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    if (warn && !s.runs.empty() && !s.runs[0].classes_missing_from_train.empty())
      *warn << "warning: " << s.runs[0].classes_missing_from_train.size()
            << " class(es) absent from the probe training split\n";
  }
  std::vector<double> f1, acc;
  for (const auto& r : s.runs) {
    f1.push_back(r.micro_f1);
    acc.push_back(r.accuracy);
  }
  s.micro_f1 = mean_std(f1);
  s.accuracy = mean_std(acc);
  return s;
}

/// k-means with k = number of distinct labels, scored against the labels.
inline ClusteringSummary cluster(const Tensor& embeddings, std::span<const int> labels, std::uint64_t seed,
                                 KMeansOptions options = {}) {
  std::vector<int> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  options.k = distinct.size();
  RngStream rng(seed, RngPurpose::kmeans);
  const auto km = kmeans(embeddings, options, rng);
  return {nmi(km.assignments, labels), homogeneity(km.assignments, labels), options.k, km.inertia};
}

/// Serialized evaluation output. Fields that were not computed are left out;
/// standard deviations appear only with two or more runs.
struct MetricsReport {
  std::string mode;
  std::optional<ClassificationSummary> classification;
  std::optional<ClassificationSummary> baseline_classification;
  std::optional<ClusteringSummary> clustering;
  std::optional<ClusteringSummary> baseline_clustering;
  std::optional<TimingTable> timing;
  std::string loss_curve_path;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();

  nlohmann::json to_json() const {
    using nlohmann::json;
    json j{{"mode", mode}, {"config", config}, {"seeds", seeds}};
    if (!loss_curve_path.empty()) j["loss_curve"] = loss_curve_path;
    if (classification) j["classification"] = summary_json(*classification);
    if (baseline_classification) j["raw_feature_baseline"]["classification"] = summary_json(*baseline_classification);
    if (clustering) j["clustering"] = clustering_json(*clustering);
    if (baseline_clustering) j["raw_feature_baseline"]["clustering"] = clustering_json(*baseline_clustering);
    if (timing) {
      json entries = json::array();
      for (const auto* e : {&timing->linear, &timing->gconv})
        entries.push_back({{"encoder_kind", e->encoder_kind}, {"wall_millis", e->median_millis}});
      j["timing"] = {{"entries", entries}, {"ratio", timing->ratio}, {"statistic", "median"}};
    }
    return j;
  }

 private:
  static nlohmann::json stat_json(const MeanStd& m, std::size_t runs) {
    nlohmann::json j{{"mean", m.mean}};
    if (runs >= 2) j["std"] = m.std;
    return j;
  }

  static nlohmann::json summary_json(const ClassificationSummary& s) {
    nlohmann::json per_run = nlohmann::json::array();
    for (std::size_t r = 0; r < s.runs.size(); ++r)
      per_run.push_back({{"run", r},
                         {"micro_f1", s.runs[r].micro_f1},
                         {"accuracy", s.runs[r].accuracy},
                         {"best_epoch", s.runs[r].best_epoch}});
    return {{"runs", s.runs.size()},
            {"micro_f1", stat_json(s.micro_f1, s.runs.size())},
            {"accuracy", stat_json(s.accuracy, s.runs.size())},
            {"per_run", per_run}};
  }

  static nlohmann::json clustering_json(const ClusteringSummary& c) {
    return {{"k", c.k}, {"nmi", c.nmi}, {"homogeneity", c.homogeneity}, {"nmi_normalization", "arithmetic_mean"}};
  }
};

}  // namespace signa
