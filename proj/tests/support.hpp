#pragma once

// Fixtures and independent reference implementations used by the unit suites
// and the acceptance binary. The oracles deliberately avoid the library's
// vectorized code paths: plain loops over std::vector, recomputed from
// scratch.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "signa/signa.hpp"

namespace signa::testing {

/// Erdos-Renyi style graph with Gaussian features and uniform labels.
inline Graph random_graph(std::size_t n, double p, std::size_t dim, int classes, RngStream& rng,
                          std::vector<Edge>* raw_edges = nullptr) {
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (rng.bernoulli(p)) edges.emplace_back(u, v);
  Tensor x(Shape{n, dim});
  for (auto& v : x.data()) v = rng.normal();
  std::vector<int> labels(n);
  for (auto& y : labels) y = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
  if (raw_edges) *raw_edges = edges;
  return Graph::from_edges(n, edges, std::move(x), std::move(labels));
}

inline Tensor random_matrix(std::size_t r, std::size_t c, RngStream& rng, double scale = 1.0) {
  Tensor t(Shape{r, c});
  for (auto& v : t.data()) v = scale * rng.normal();
  return t;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("signa_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Writes edges.txt / features.csv / labels.txt for `g`.
inline void write_graph_files(const Graph& g, const std::filesystem::path& dir) {
  std::string edges;
  for (const auto& [u, v] : g.edges()) edges += std::to_string(u) + " " + std::to_string(v) + "\n";
  write_text(dir / "edges.txt", edges);
  std::string feats;
  const auto& x = g.features();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) feats += (c ? "," : "") + format_real(x(r, c));
    feats += "\n";
  }
  write_text(dir / "features.csv", feats);
  if (g.has_labels()) {
    std::string labels;
    for (auto y : g.labels()) labels += std::to_string(y) + "\n";
    write_text(dir / "labels.txt", labels);
  }
}

// ---------------------------------------------------------------------------
// Loss oracles

using Rows = std::vector<std::vector<double>>;

inline Rows to_rows(const Tensor& z) {
  Rows out(z.rows(), std::vector<double>(z.cols()));
  for (std::size_t r = 0; r < z.rows(); ++r)
    for (std::size_t c = 0; c < z.cols(); ++c) out[r][c] = z(r, c);
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  return dot(a, b) / std::sqrt(dot(a, a) * dot(b, b));
}

inline std::vector<std::set<std::size_t>> positive_sets(const ContrastDraw& draw) {
  std::vector<std::set<std::size_t>> out(draw.num_nodes());
  for (std::size_t u = 0; u < draw.num_nodes(); ++u)
    for (auto v : draw.positives(u)) out[u].insert(v);
  return out;
}

template <class D>
double naive_jsd_family(const Rows& z, const ContrastDraw& draw, double eps, D discriminator) {
  const auto pos = positive_sets(draw);
  const std::size_t n = z.size();
  double total = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    double pos_sum = 0.0, neg_sum = 0.0;
    std::size_t pos_count = 0, neg_count = 0;
    for (std::size_t v = 0; v < n; ++v) {
      const double d = std::min(std::max(discriminator(z[u], z[v]), eps), 1.0 - eps);
      if (pos[u].count(v)) {
        pos_sum += std::log(d);
        ++pos_count;
      } else {
        neg_sum += std::log(1.0 - d);
        ++neg_count;
      }
    }
    total += -pos_sum / static_cast<double>(pos_count) - neg_sum / static_cast<double>(neg_count);
  }
  return total / static_cast<double>(n);
}

inline double naive_norm_jsd(const Rows& z, const ContrastDraw& draw, double eps) {
  return naive_jsd_family(z, draw, eps, [](const auto& a, const auto& b) { return (cosine(a, b) + 1.0) / 2.0; });
}

inline double naive_jsd(const Rows& z, const ContrastDraw& draw, double eps) {
  return naive_jsd_family(z, draw, eps, [](const auto& a, const auto& b) { return 1.0 / (1.0 + std::exp(-dot(a, b))); });
}

inline double naive_info_nce(const Rows& z, const ContrastDraw& draw, double tau) {
  const auto pos = positive_sets(draw);
  const std::size_t n = z.size();
  double total = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    double denom = 0.0;
    for (std::size_t w = 0; w < n; ++w)
      if (w != u) denom += std::exp(cosine(z[u], z[w]) / tau);
    double acc = 0.0;
    std::size_t k = 0;
    for (std::size_t v = 0; v < n; ++v) {
      if (v == u || !pos[u].count(v)) continue;
      acc += std::log(std::exp(cosine(z[u], z[v]) / tau) / denom);
      ++k;
    }
    if (k > 0) total += -acc / static_cast<double>(k);
  }
  return total / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Homophily oracles over a raw (possibly unsorted, duplicated) edge list

inline std::vector<std::vector<bool>> dense_adjacency(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::vector<bool>> a(n, std::vector<bool>(n, false));
  for (const auto& [u, v] : edges)
    if (u != v) a[u][v] = a[v][u] = true;
  return a;
}

inline double naive_global_homophily(const std::vector<std::vector<bool>>& a, const std::vector<int>& y) {
  std::size_t same = 0, total = 0;
  for (std::size_t u = 0; u < a.size(); ++u)
    for (std::size_t v = u + 1; v < a.size(); ++v)
      if (a[u][v]) {
        ++total;
        same += y[u] == y[v];
      }
  return static_cast<double>(same) / static_cast<double>(total);
}

inline std::pair<std::vector<std::size_t>, std::vector<double>> naive_local_homophily(
    const std::vector<std::vector<bool>>& a, const std::vector<int>& y) {
  std::vector<std::size_t> counts(a.size(), 0);
  std::vector<double> ratios(a.size(), std::nan(""));
  for (std::size_t u = 0; u < a.size(); ++u) {
    std::size_t deg = 0;
    for (std::size_t v = 0; v < a.size(); ++v)
      if (a[u][v]) {
        ++deg;
        counts[u] += y[u] == y[v];
      }
    if (deg > 0) ratios[u] = static_cast<double>(counts[u]) / static_cast<double>(deg);
  }
  return {counts, ratios};
}

// ---------------------------------------------------------------------------
// Clustering metric oracles, straight from the probability definitions

struct Joint {
  std::vector<std::vector<double>> p;  // p[i][j] over (cluster i, class j)
  std::vector<double> pk, pc;
};

inline Joint joint_distribution(const std::vector<int>& k, const std::vector<int>& c) {
  int mk = 0, mc = 0;
  for (auto v : k) mk = std::max(mk, v);
  for (auto v : c) mc = std::max(mc, v);
  Joint j;
  j.p.assign(static_cast<std::size_t>(mk) + 1, std::vector<double>(static_cast<std::size_t>(mc) + 1, 0.0));
  j.pk.assign(static_cast<std::size_t>(mk) + 1, 0.0);
  j.pc.assign(static_cast<std::size_t>(mc) + 1, 0.0);
  const double w = 1.0 / static_cast<double>(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    j.p[static_cast<std::size_t>(k[i])][static_cast<std::size_t>(c[i])] += w;
    j.pk[static_cast<std::size_t>(k[i])] += w;
    j.pc[static_cast<std::size_t>(c[i])] += w;
  }
  return j;
}

inline double entropy_of(const std::vector<double>& p) {
  double h = 0.0;
  for (auto q : p)
    if (q > 0) h -= q * std::log(q);
  return h;
}

inline std::size_t support_size(const std::vector<double>& p) {
  return static_cast<std::size_t>(std::count_if(p.begin(), p.end(), [](double q) { return q > 0; }));
}

inline double naive_nmi(const std::vector<int>& k, const std::vector<int>& c) {
  const auto j = joint_distribution(k, c);
  const std::size_t sk = support_size(j.pk), sc = support_size(j.pc);
  if (sk == 1 && sc == 1) return 1.0;
  if (sk == 1 || sc == 1) return 0.0;
  double mi = 0.0;
  for (std::size_t a = 0; a < j.p.size(); ++a)
    for (std::size_t b = 0; b < j.p[a].size(); ++b)
      if (j.p[a][b] > 0) mi += j.p[a][b] * std::log(j.p[a][b] / (j.pk[a] * j.pc[b]));
  return mi / ((entropy_of(j.pk) + entropy_of(j.pc)) / 2.0);
}

inline double naive_homogeneity(const std::vector<int>& k, const std::vector<int>& c) {
  const auto j = joint_distribution(k, c);
  const double hc = entropy_of(j.pc);
  if (hc == 0.0) return 1.0;
  double h_c_given_k = 0.0;
  for (std::size_t a = 0; a < j.p.size(); ++a)
    for (std::size_t b = 0; b < j.p[a].size(); ++b)
      if (j.p[a][b] > 0) h_c_given_k -= j.p[a][b] * std::log(j.p[a][b] / j.pk[a]);
  return 1.0 - h_c_given_k / hc;
}

/// Every set partition of n items into at most `max_cells` cells, as
/// restricted growth strings.
inline std::vector<std::vector<int>> set_partitions(std::size_t n, int max_cells) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(n, 0);
  auto rec = [&](auto&& self, std::size_t i, int used) -> void {
    if (i == n) {
      out.push_back(cur);
      return;
    }
    for (int c = 0; c <= std::min(used, max_cells - 1); ++c) {
      cur[i] = c;
      self(self, i + 1, std::max(used, c + 1));
    }
  };
  if (n == 0) return out;
  cur[0] = 0;
  rec(rec, 1, 1);
  return out;
}

// ---------------------------------------------------------------------------
// Gradient-check cases for every differentiable op, shared by the diffcore
// suite and the acceptance binary.

/// Keeps values away from the kinks of relu-like activations so central
/// differences with h = 1e-6 never straddle one.
inline Tensor away_from_zero(Tensor t) {
  for (auto& v : t.data())
    if (std::abs(v) < 1e-3) v = v < 0 ? -1e-3 : 1e-3;
  return t;
}

/// Reduces a tensor-valued op to a scalar with fixed random weights so every
/// output entry influences the loss differently.
inline Var<double> weighted_sum(const Var<double>& y, const Tensor& w) {
  return ad::sum(ad::hadamard(y, y.tape().constant(w)));
}

inline Tensor flat(const Tensor& t) { return Tensor(Shape{t.size()}, std::vector<double>(t.data().begin(), t.data().end())); }

/// Strictly positive entries for ops with a restricted domain such as log.
inline Tensor shifted_abs(Tensor t) {
  for (auto& v : t.data()) v = 0.2 + std::abs(v);
  return t;
}

class OpGradcheckSuite {
 public:
  struct Case {
    std::string name;
    std::function<Var<double>(Tape<double>&)> f;
    std::vector<Parameter*> params;
  };

  explicit OpGradcheckSuite(std::uint64_t seed)
      : seed_(seed),
        rng_(seed, RngPurpose::init),
        graph_(random_graph(4, 0.5, 1, 2, rng_)),
        adj_(graph_),
        a_("a", random_matrix(4, 3, rng_)),
        b_("b", random_matrix(3, 5, rng_)),
        c_("c", random_matrix(4, 5, rng_)),
        pos_("pos", shifted_abs(random_matrix(4, 5, rng_))),
        row_("row", flat(random_matrix(1, 5, rng_))),
        slope_("slope", Tensor::scalar(0.25)),
        gain_("gain", flat(random_matrix(1, 5, rng_))),
        bias_("bias", Tensor(Shape{5}, 0.1)),
        kinked_("kinked", away_from_zero(random_matrix(4, 5, rng_))),
        w_(random_matrix(4, 5, rng_)),
        w_rows_(flat(random_matrix(4, 1, rng_))),
        mask_(Shape{4, 5}, 1.0) {
    mask_(0, 0) = mask_(1, 3) = mask_(2, 2) = 0.0;
    build();
  }
  OpGradcheckSuite(const OpGradcheckSuite&) = delete;
  OpGradcheckSuite& operator=(const OpGradcheckSuite&) = delete;

  const std::vector<Case>& cases() const { return cases_; }

 private:
  void build() {
    auto& a = a_; auto& b = b_; auto& c = c_; auto& pos = pos_; auto& row = row_; auto& slope = slope_;
    auto& gain = gain_; auto& bias = bias_; auto& kinked = kinked_;
    const auto& w = w_; const auto& w_rows = w_rows_; const auto& mask = mask_; const auto& adj = adj_;
    const auto seed = seed_;
    cases_ = {
        {"matmul", [&](Tape<double>& t) { return weighted_sum(ad::matmul(t.param(a), t.param(b)), w); }, {&a, &b}},
        {"transpose", [&](Tape<double>& t) { return weighted_sum(ad::transpose(ad::transpose(t.param(c))), w); }, {&c}},
        {"add", [&](Tape<double>& t) { return weighted_sum(ad::add(t.param(c), t.param(pos)), w); }, {&c, &pos}},
        {"sub", [&](Tape<double>& t) { return weighted_sum(ad::sub(t.param(c), t.param(pos)), w); }, {&c, &pos}},
        {"hadamard", [&](Tape<double>& t) { return weighted_sum(ad::hadamard(t.param(c), t.param(pos)), w); }, {&c, &pos}},
        {"scalar_mul", [&](Tape<double>& t) { return weighted_sum(ad::scalar_mul(t.param(c), -1.7), w); }, {&c}},
        {"add_scalar", [&](Tape<double>& t) { return weighted_sum(ad::add_scalar(t.param(c), 0.3), w); }, {&c}},
        {"log", [&](Tape<double>& t) { return weighted_sum(ad::log(t.param(pos)), w); }, {&pos}},
        {"neg_mean_log", [&](Tape<double>& t) { return ad::scalar_mul(ad::mean(ad::log(t.param(pos))), -1.0); }, {&pos}},
        {"exp", [&](Tape<double>& t) { return weighted_sum(ad::exp(t.param(c)), w); }, {&c}},
        {"sigmoid", [&](Tape<double>& t) { return weighted_sum(ad::sigmoid(t.param(c)), w); }, {&c}},
        {"clamp", [&](Tape<double>& t) { return weighted_sum(ad::clamp(t.param(kinked), -0.5, 0.5), w); }, {&kinked}},
        {"sum", [&](Tape<double>& t) { return ad::sum(ad::hadamard(t.param(c), t.param(c))); }, {&c}},
        {"row_sum",
         [&](Tape<double>& t) { return ad::sum(ad::hadamard(ad::row_sum(t.param(c)), t.constant(w_rows))); },
         {&c}},
        {"mean", [&](Tape<double>& t) { return ad::mean(ad::hadamard(t.param(c), t.constant(w))); }, {&c}},
        {"add_row_vector",
         [&](Tape<double>& t) { return weighted_sum(ad::add_row_vector(t.param(c), t.param(row)), w); },
         {&c, &row}},
        {"relu", [&](Tape<double>& t) { return weighted_sum(ad::relu(t.param(kinked)), w); }, {&kinked}},
        {"elu", [&](Tape<double>& t) { return weighted_sum(ad::elu(t.param(kinked)), w); }, {&kinked}},
        {"leaky_relu", [&](Tape<double>& t) { return weighted_sum(ad::leaky_relu(t.param(kinked), 0.23), w); }, {&kinked}},
        {"prelu",
         [&](Tape<double>& t) { return weighted_sum(ad::prelu(t.param(kinked), t.param(slope)), w); },
         {&kinked, &slope}},
        {"dropout",
         [&, seed](Tape<double>& t) {
           RngStream d(seed, RngPurpose::dropout);
           return weighted_sum(ad::dropout(t.param(c), 0.4, d, true), w);
         },
         {&c}},
        {"layer_norm",
         [&](Tape<double>& t) { return weighted_sum(ad::layer_norm(t.param(c), t.param(gain), t.param(bias), 1e-5), w); },
         {&c, &gain, &bias}},
        {"rows_l2_normalize", [&](Tape<double>& t) { return weighted_sum(ad::rows_l2_normalize(t.param(c)), w); }, {&c}},
        {"masked_logsumexp_rows",
         [&](Tape<double>& t) {
           return ad::sum(ad::hadamard(ad::masked_logsumexp_rows(t.param(c), mask), t.constant(w_rows)));
         },
         {&c}},
        {"pair_dots", [&](Tape<double>& t) { return ad::sum(ad::pair_dots(t.param(c), {0, 1, 2, 3, 0}, {1, 1, 3, 0, 2})); }, {&c}},
        {"spmm", [&](Tape<double>& t) { return weighted_sum(ad::spmm(adj, t.param(c)), w); }, {&c}},
    };
  }

  std::uint64_t seed_;
  RngStream rng_;
  Graph graph_;
  NormalizedAdjacency adj_;
  Parameter a_, b_, c_, pos_, row_, slope_, gain_, bias_, kinked_;
  Tensor w_, w_rows_, mask_;
  std::vector<Case> cases_;
};

// ---------------------------------------------------------------------------
// Criterion 5 experiment, shared by the acceptance binary and the trainer
// suite.

struct SbmExperiment {
  Graph graph;
  TrainConfig config;
};

inline constexpr std::size_t kSbmFeatureDim = 512;
inline constexpr std::uint64_t kSbmDataSubstream = 0xda7a;

inline SbmExperiment sbm_experiment(std::uint64_t seed, std::size_t feature_dim = kSbmFeatureDim) {
  // Graph data comes from its own substream so it never shares draws with
  // weight initialization under the same seed.
  auto rng = RngStream(seed, RngPurpose::init).fork(kSbmDataSubstream);
  SbmSpec spec{{100, 100}, 0.1, 0.01, separated_means(2, feature_dim, 1.0), 1.0};
  SbmExperiment e{sbm_generate(spec, rng), {}};
  e.config.model.base_encoder = BaseEncoder::linear;
  e.config.model.hidden_dim = 64;
  e.config.model.projector_dim = 32;
  e.config.model.dropout_p = 0.4;
  e.config.mask_rate = 0.3;
  e.config.learning_rate = 1e-3;
  e.config.num_epochs = 200;
  e.config.seed = seed;
  return e;
}

}  // namespace signa::testing
