#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "signa/diffcore/error.hpp"
#include "signa/diffcore/ops.hpp"
#include "signa/diffcore/rng.hpp"
#include "signa/diffcore/tape.hpp"
#include "signa/graph/graph.hpp"

namespace signa {

/// One epoch's positive sets. P_u always contains u; every other member is a
/// true neighbor of u. The negative set is the complement V \ P_u.
class ContrastDraw {
 public:
  ContrastDraw(std::size_t num_nodes, std::vector<std::size_t> offsets, std::vector<std::size_t> positives,
               double mask_rate, std::uint64_t epoch)
      : num_nodes_(num_nodes),
        offsets_(std::move(offsets)),
        positives_(std::move(positives)),
        mask_rate_(mask_rate),
        epoch_(epoch) {}

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  double mask_rate() const noexcept { return mask_rate_; }
  std::uint64_t epoch() const noexcept { return epoch_; }

  /// Sorted ascending.
  std::span<const std::size_t> positives(std::size_t u) const {
    return std::span<const std::size_t>(positives_).subspan(offsets_[u], offsets_[u + 1] - offsets_[u]);
  }
  std::size_t num_positives(std::size_t u) const { return offsets_[u + 1] - offsets_[u]; }
  std::size_t num_negatives(std::size_t u) const { return num_nodes_ - num_positives(u); }
  bool is_positive(std::size_t u, std::size_t v) const {
    const auto p = positives(u);
    return std::binary_search(p.begin(), p.end(), v);
  }

  bool operator==(const ContrastDraw&) const = default;

 private:
  std::size_t num_nodes_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> positives_;
  double mask_rate_;
  std::uint64_t epoch_;
};

/// Stochastic neighbor masking. For every anchor u and every neighbor v (in
/// CSR order) one uniform draw decides the mask m ~ Bernoulli(alpha); unmasked
/// neighbors join P_u. Draws for (u, v) and (v, u) are independent.
inline ContrastDraw draw_masks(const Graph& g, double alpha, RngStream& rng, std::uint64_t epoch = 0) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("mask rate must lie in [0, 1], got " + std::to_string(alpha));
  const std::size_t n = g.num_nodes();
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::size_t> positives;
  positives.reserve(n + g.csr_targets().size());
  for (std::size_t u = 0; u < n; ++u) {
    const auto begin = positives.size();
    positives.push_back(u);
    for (auto v : g.neighbors(u))
      if (!(rng.uniform() < alpha)) positives.push_back(v);
    std::sort(positives.begin() + static_cast<std::ptrdiff_t>(begin), positives.end());
    offsets[u + 1] = positives.size();
  }
  return ContrastDraw(n, std::move(offsets), std::move(positives), alpha, epoch);
}

enum class EstimatorKind { norm_jsd, jsd, info_nce };

inline std::string_view to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::norm_jsd: return "norm_jsd";
    case EstimatorKind::jsd: return "jsd";
    case EstimatorKind::info_nce: return "info_nce";
  }
  return "norm_jsd";
}

inline EstimatorKind parse_estimator(std::string_view s) {
  if (s == "norm_jsd") return EstimatorKind::norm_jsd;
  if (s == "jsd") return EstimatorKind::jsd;
  if (s == "info_nce") return EstimatorKind::info_nce;
  throw ConfigError("unknown estimator kind '" + std::string(s) + "'");
}

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::norm_jsd;
  /// InfoNCE only.
  double temperature = 0.5;
  double clamp_eps = 1e-7;
  /// 0 uses every node of Q_u; k > 0 samples k negatives per anchor uniformly
  /// (with replacement) from Q_u. JSD-family estimators only.
  std::size_t negative_samples = 0;

  bool operator==(const EstimatorSpec&) const = default;

  std::vector<std::string> validate() const {
    std::vector<std::string> issues;
    if (!(temperature > 0.0)) issues.push_back("estimator.temperature must be > 0");
    if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) issues.push_back("estimator.clamp_eps must lie in (0, 0.5)");
    if (negative_samples > 0 && kind == EstimatorKind::info_nce)
      issues.push_back("estimator.negative_samples is only supported for norm_jsd and jsd");
    return issues;
  }
};

/// (cos(a, b) + 1) / 2.
template <std::floating_point Real>
Real discriminator_norm(std::span<const Real> a, std::span<const Real> b) {
  if (a.size() != b.size()) throw DimensionError("discriminator_norm: vector lengths differ");
  Real dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (!(static_cast<double>(na) >= ad::kMinRowNorm)) throw DegenerateEmbedding(0, "first vector has norm below 1e-12");
  if (!(static_cast<double>(nb) >= ad::kMinRowNorm)) throw DegenerateEmbedding(1, "second vector has norm below 1e-12");
  const Real c = std::clamp(dot / (na * nb), Real(-1), Real(1));
  return (c + Real(1)) / Real(2);
}

namespace contrast_detail {

inline void require_negatives(const ContrastDraw& draw) {
  for (std::size_t u = 0; u < draw.num_nodes(); ++u)
    if (draw.num_negatives(u) == 0)
      throw DegenerateGraph("anchor " + std::to_string(u) + " has an empty negative set");
}

template <std::floating_point Real>
void require_rows(const Var<Real>& z, const ContrastDraw& draw) {
  z.value().require_matrix("contrastive loss");
  if (z.value().rows() != draw.num_nodes())
    throw DimensionError("embeddings have " + std::to_string(z.value().rows()) + " rows, draw covers " +
                         std::to_string(draw.num_nodes()) + " nodes");
}

/// Dense weights: pos(u, v) = 1/|P_u| on P_u, neg(u, v) = 1/|Q_u| on Q_u.
template <std::floating_point Real>
std::pair<BasicTensor<Real>, BasicTensor<Real>> jsd_weights(const ContrastDraw& draw) {
  const std::size_t n = draw.num_nodes();
  BasicTensor<Real> pos(Shape{n, n}), neg(Shape{n, n});
  for (std::size_t u = 0; u < n; ++u) {
    const Real wn = Real(1) / static_cast<Real>(draw.num_negatives(u));
    for (std::size_t v = 0; v < n; ++v) neg(u, v) = wn;
    const Real wp = Real(1) / static_cast<Real>(draw.num_positives(u));
    for (auto v : draw.positives(u)) {
      pos(u, v) = wp;
      neg(u, v) = 0;
    }
  }
  return {std::move(pos), std::move(neg)};
}

/// l(u) = -sum_v pos(u,v) log Dc(u,v) - sum_v neg(u,v) log(1 - Dc(u,v)).
template <std::floating_point Real>
Var<Real> jsd_anchor_losses(const Var<Real>& d, const ContrastDraw& draw, Real eps) {
  auto& tape = d.tape();
  auto [pos_w, neg_w] = jsd_weights<Real>(draw);
  const auto dc = ad::clamp(d, eps, Real(1) - eps);
  const auto log_pos = ad::log(dc);
  const auto log_neg = ad::log(ad::add_scalar(ad::scalar_mul(dc, Real(-1)), Real(1)));
  const auto pos = ad::row_sum(ad::hadamard(log_pos, tape.constant(std::move(pos_w))));
  const auto neg = ad::row_sum(ad::hadamard(log_neg, tape.constant(std::move(neg_w))));
  return ad::scalar_mul(ad::add(pos, neg), Real(-1));
}

}  // namespace contrast_detail

/// Per-anchor Norm-JSD losses (vector of |V|). D = (cos + 1) / 2 on the raw
/// projections, clamped to [eps, 1 - eps] before the logs.
template <std::floating_point Real>
Var<Real> anchor_losses_norm_jsd(const Var<Real>& z, const ContrastDraw& draw, Real eps) {
  contrast_detail::require_rows(z, draw);
  contrast_detail::require_negatives(draw);
  const auto zn = ad::rows_l2_normalize(z);
  const auto s = ad::matmul(zn, ad::transpose(zn));
  const auto d = ad::scalar_mul(ad::add_scalar(s, Real(1)), Real(0.5));
  return contrast_detail::jsd_anchor_losses(d, draw, eps);
}

/// Mean Norm-JSD loss over all anchors.
template <std::floating_point Real>
Var<Real> loss_norm_jsd(const Var<Real>& z, const ContrastDraw& draw, Real eps) {
  return ad::mean(anchor_losses_norm_jsd(z, draw, eps));
}

/// Per-anchor JSD losses with the sigmoid(inner product) discriminator.
template <std::floating_point Real>
Var<Real> anchor_losses_jsd(const Var<Real>& z, const ContrastDraw& draw, Real eps) {
  contrast_detail::require_rows(z, draw);
  contrast_detail::require_negatives(draw);
  const auto s = ad::matmul(z, ad::transpose(z));
  return contrast_detail::jsd_anchor_losses(ad::sigmoid(s), draw, eps);
}

template <std::floating_point Real>
Var<Real> loss_jsd_ablation(const Var<Real>& z, const ContrastDraw& draw, Real eps) {
  return ad::mean(anchor_losses_jsd(z, draw, eps));
}

/// Per-anchor InfoNCE losses over cosine / temperature logits:
///   l(u) = -(1/k_u) sum_{v in P_u \ {u}} [ s(u,v) - log sum_{w != u} exp s(u,w) ],
/// k_u = |P_u \ {u}|; anchors without a non-self positive contribute 0.
template <std::floating_point Real>
Var<Real> anchor_losses_info_nce(const Var<Real>& z, const ContrastDraw& draw, Real temperature) {
  if (!(temperature > 0)) throw InvalidArgument("InfoNCE temperature must be > 0");
  contrast_detail::require_rows(z, draw);
  const std::size_t n = draw.num_nodes();
  if (n < 2) throw DegenerateGraph("InfoNCE needs at least two nodes");
  auto& tape = z.tape();
  BasicTensor<Real> off_diag(Shape{n, n}, Real(1));
  BasicTensor<Real> pos_w(Shape{n, n});
  BasicTensor<Real> has_pos(Shape{n});
  for (std::size_t u = 0; u < n; ++u) {
    off_diag(u, u) = 0;
    const std::size_t k = draw.num_positives(u) - 1;
    if (k == 0) continue;
    has_pos[u] = 1;
    for (auto v : draw.positives(u))
      if (v != u) pos_w(u, v) = Real(1) / static_cast<Real>(k);
  }
  const auto zn = ad::rows_l2_normalize(z);
  const auto logits = ad::scalar_mul(ad::matmul(zn, ad::transpose(zn)), Real(1) / temperature);
  const auto lse = ad::masked_logsumexp_rows(logits, off_diag);
  const auto pos = ad::row_sum(ad::hadamard(logits, tape.constant(std::move(pos_w))));
  return ad::sub(ad::hadamard(lse, tape.constant(std::move(has_pos))), pos);
}

template <std::floating_point Real>
Var<Real> loss_info_nce_ablation(const Var<Real>& z, const ContrastDraw& draw, Real temperature) {
  return ad::mean(anchor_losses_info_nce(z, draw, temperature));
}

/// JSD-family loss with k negatives per anchor sampled uniformly (with
/// replacement) from Q_u; positives are used in full.
template <std::floating_point Real>
Var<Real> loss_jsd_sampled(const Var<Real>& z, const ContrastDraw& draw, EstimatorKind kind, std::size_t k,
                           Real eps, RngStream& rng) {
  if (kind == EstimatorKind::info_nce) throw ConfigError("negative sampling is not available for info_nce");
  if (k == 0) throw InvalidArgument("negative sample count must be positive");
  contrast_detail::require_rows(z, draw);
  contrast_detail::require_negatives(draw);
  const std::size_t n = draw.num_nodes();
  std::vector<std::size_t> first, second;
  std::vector<Real> pos_w, neg_w;
  for (std::size_t u = 0; u < n; ++u) {
    const Real wp = Real(1) / static_cast<Real>(draw.num_positives(u));
    for (auto v : draw.positives(u)) {
      first.push_back(u);
      second.push_back(v);
      pos_w.push_back(wp);
      neg_w.push_back(0);
    }
    const Real wn = Real(1) / static_cast<Real>(k);
    for (std::size_t s = 0; s < k; ++s) {
      std::size_t v;
      do v = static_cast<std::size_t>(rng.below(n));
      while (draw.is_positive(u, v));
      first.push_back(u);
      second.push_back(v);
      pos_w.push_back(0);
      neg_w.push_back(wn);
    }
  }
  auto& tape = z.tape();
  const Shape shape{first.size()};
  Var<Real> d;
  if (kind == EstimatorKind::norm_jsd) {
    const auto dots = ad::pair_dots(ad::rows_l2_normalize(z), std::move(first), std::move(second));
    d = ad::scalar_mul(ad::add_scalar(dots, Real(1)), Real(0.5));
  } else {
    d = ad::sigmoid(ad::pair_dots(z, std::move(first), std::move(second)));
  }
  const auto dc = ad::clamp(d, eps, Real(1) - eps);
  const auto pos = ad::sum(ad::hadamard(ad::log(dc), tape.constant(BasicTensor<Real>(shape, std::move(pos_w)))));
  const auto neg = ad::sum(ad::hadamard(ad::log(ad::add_scalar(ad::scalar_mul(dc, Real(-1)), Real(1))),
                                        tape.constant(BasicTensor<Real>(shape, std::move(neg_w)))));
  return ad::scalar_mul(ad::add(pos, neg), Real(-1) / static_cast<Real>(n));
}

/// Dispatches on the estimator. `rng` is consumed only by negative sampling.
template <std::floating_point Real>
Var<Real> contrastive_loss(const Var<Real>& z, const ContrastDraw& draw, const EstimatorSpec& est, RngStream& rng) {
  if (auto issues = est.validate(); !issues.empty()) throw ConfigError(issues);
  const Real eps = static_cast<Real>(est.clamp_eps);
  if (est.negative_samples > 0) return loss_jsd_sampled(z, draw, est.kind, est.negative_samples, eps, rng);
  switch (est.kind) {
    case EstimatorKind::norm_jsd: return loss_norm_jsd(z, draw, eps);
    case EstimatorKind::jsd: return loss_jsd_ablation(z, draw, eps);
    case EstimatorKind::info_nce: return loss_info_nce_ablation(z, draw, static_cast<Real>(est.temperature));
  }
  throw ConfigError("unknown estimator");
}

struct TheoremReport {
  double mask_rate = 0.0;
  double target_pos = 1.0;
  double target_neg = 0.0;
  std::size_t trials = 0;
  std::size_t neighbor_samples = 0;
  std::size_t non_neighbor_samples = 0;
  double neighbor_mean = 0.0;
  double non_neighbor_mean = 0.0;
  double expected_neighbor_mean = 0.0;
  double expected_non_neighbor_mean = 0.0;
  double standard_error = 0.0;
  /// Three binomial standard errors; zero when alpha is 0 or 1.
  double tolerance = 0.0;
  bool passed = false;
};

/// Monte Carlo check of the expected target similarity under stochastic
/// masking: over `num_trials` independent draws on `g`, every anchor/other
/// pair gets target `target_pos` if the other node landed in P_u and
/// `target_neg` otherwise. Neighbors should average
/// target_pos (1 - alpha) + target_neg alpha; non-neighbors exactly target_neg.
inline TheoremReport verify_theorem(const Graph& g, double alpha, double target_pos, double target_neg,
                                    std::size_t num_trials, RngStream& rng) {
  if (num_trials < 1000) throw InvalidArgument("verify_theorem needs at least 1000 trials");
  TheoremReport r;
  r.mask_rate = alpha;
  r.target_pos = target_pos;
  r.target_neg = target_neg;
  r.trials = num_trials;
  const std::size_t n = g.num_nodes();
  const std::size_t directed_neighbor_pairs = 2 * g.num_edges();
  const std::size_t non_neighbor_pairs = n * (n - 1) - directed_neighbor_pairs;
  std::size_t neighbor_hits = 0, non_neighbor_hits = 0;
  for (std::size_t t = 0; t < num_trials; ++t) {
    const auto draw = draw_masks(g, alpha, rng, t);
    for (std::size_t u = 0; u < n; ++u)
      for (auto v : draw.positives(u)) {
        if (v == u) continue;
        if (g.has_edge(u, v)) ++neighbor_hits;
        else ++non_neighbor_hits;
      }
  }
  r.neighbor_samples = directed_neighbor_pairs * num_trials;
  r.non_neighbor_samples = non_neighbor_pairs * num_trials;
  // Written as target_neg + (target_pos - target_neg) * hit_rate so the
  // degenerate cases (no hits, all hits) come out exact.
  auto mean_of = [&](std::size_t hits, std::size_t samples) {
    if (samples == 0) return target_neg;
    if (hits == samples) return target_pos;
    return target_neg + (target_pos - target_neg) * (static_cast<double>(hits) / static_cast<double>(samples));
  };
  r.neighbor_mean = mean_of(neighbor_hits, r.neighbor_samples);
  r.non_neighbor_mean = mean_of(non_neighbor_hits, r.non_neighbor_samples);
  r.expected_neighbor_mean = target_pos * (1.0 - alpha) + target_neg * alpha;
  r.expected_non_neighbor_mean = target_neg;
  if (r.neighbor_samples > 0)
    r.standard_error = std::abs(target_pos - target_neg) *
                       std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(r.neighbor_samples));
  r.tolerance = 3.0 * r.standard_error;
  const bool neighbor_ok = std::abs(r.neighbor_mean - r.expected_neighbor_mean) <= r.tolerance + 1e-12;
  const bool non_neighbor_ok = r.non_neighbor_mean == r.expected_non_neighbor_mean || r.non_neighbor_samples == 0;
  r.passed = neighbor_ok && non_neighbor_ok;
  return r;
}

}  // namespace signa
