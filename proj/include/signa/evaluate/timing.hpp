#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "signa/diffcore/error.hpp"
#include "signa/diffcore/rng.hpp"
#include "signa/encoder.hpp"
#include "signa/graph/adjacency.hpp"
#include "signa/graph/graph.hpp"

namespace signa {

struct TimingOptions {
  std::size_t repeats = 20;
  std::size_t warmup = 3;
};

struct TimingEntry {
  std::string encoder_kind;
  double median_millis = 0.0;
  std::vector<double> samples_millis;
};

struct TimingTable {
  TimingEntry linear;
  TimingEntry gconv;
  /// gconv median divided by linear median.
  double ratio = 0.0;
};

inline double median_of(std::vector<double> xs) {
  if (xs.empty()) throw InvalidArgument("median of an empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

namespace timing_detail {

/// One encoder under measurement; the normalized adjacency is built up front.
template <std::floating_point Real>
struct Timed {
  const BasicEncoderState<Real>& state;
  const ModelSpec& spec;
  std::optional<BasicNormalizedAdjacency<Real>> adj;
  TimingEntry entry;

  Timed(const BasicEncoderState<Real>& s, const ModelSpec& m, const Graph& g) : state(s), spec(m) {
    if (spec.base_encoder == BaseEncoder::gconv) adj.emplace(g);
    entry.encoder_kind = std::string(to_string(spec.base_encoder));
  }

  double pass(const Graph& g) {
    const auto start = std::chrono::steady_clock::now();
    const auto h = inference_embeddings(state, spec, g, adj ? &*adj : nullptr);
    const auto stop = std::chrono::steady_clock::now();
    volatile double sink = static_cast<double>(h[0]);
    (void)sink;
    return std::chrono::duration<double, std::milli>(stop - start).count();
  }
};

}  // namespace timing_detail

/// Median wall time of one full inference pass. The normalized adjacency is
/// built once beforehand and is not part of the measurement.
template <std::floating_point Real>
TimingEntry time_inference(const BasicEncoderState<Real>& state, const ModelSpec& spec, const Graph& g,
                           const TimingOptions& options) {
  if (options.repeats == 0) throw InvalidArgument("timing needs at least one repeat");
  timing_detail::Timed<Real> t(state, spec, g);
  for (std::size_t i = 0; i < options.warmup + options.repeats; ++i) {
    const double ms = t.pass(g);
    if (i >= options.warmup) t.entry.samples_millis.push_back(ms);
  }
  t.entry.median_millis = median_of(t.entry.samples_millis);
  return t.entry;
}

/// Times the same architecture with a linear and a gconv base encoder. Both
/// encoders get independently initialized weights from `seed`. Passes of the
/// two encoders are interleaved, alternating which runs first, so slow drift
/// in machine load affects both samples alike.
template <std::floating_point Real = double>
TimingTable timing_harness(const Graph& g, ModelSpec spec, std::uint64_t seed, const TimingOptions& options = {}) {
  if (options.repeats == 0) throw InvalidArgument("timing needs at least one repeat");
  ModelSpec mlp = spec, gcn = spec;
  mlp.base_encoder = BaseEncoder::linear;
  gcn.base_encoder = BaseEncoder::gconv;
  RngStream rng(seed, RngPurpose::init);
  const auto mlp_state = init_encoder<Real>(mlp, g.num_features(), rng);
  const auto gcn_state = init_encoder<Real>(gcn, g.num_features(), rng);
  timing_detail::Timed<Real> linear(mlp_state, mlp, g), gconv(gcn_state, gcn, g);
  for (std::size_t i = 0; i < options.warmup + options.repeats; ++i) {
    const bool linear_first = i % 2 == 0;
    auto& first = linear_first ? linear : gconv;
    auto& second = linear_first ? gconv : linear;
    const double a = first.pass(g);
    const double b = second.pass(g);
    if (i >= options.warmup) {
      first.entry.samples_millis.push_back(a);
      second.entry.samples_millis.push_back(b);
    }
  }
  TimingTable t;
  t.linear = std::move(linear.entry);
  t.gconv = std::move(gconv.entry);
  t.linear.median_millis = median_of(t.linear.samples_millis);
  t.gconv.median_millis = median_of(t.gconv.samples_millis);
  t.ratio = t.linear.median_millis > 0.0 ? t.gconv.median_millis / t.linear.median_millis : 0.0;
  return t;
}

}  // namespace signa
