// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any gated criterion fails. Criterion 10 is informational.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>

#include "signa/cli/commands.hpp"
#include "support.hpp"

using namespace signa;
namespace st = signa::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// 1. Gradient integrity

Outcome gradient_integrity() {
  const auto start = Clock::now();
  double worst_op = 0.0;
  std::string worst_op_name;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const st::OpGradcheckSuite suite(seed);
    for (const auto& c : suite.cases()) {
      const double err = gradcheck(c.f, c.params).max_rel_error();
      if (err > worst_op) {
        worst_op = err;
        worst_op_name = c.name;
      }
    }
  }

  // Full composed loss: dropout -> encoder -> projector -> masked estimator.
  RngStream rng(6, RngPurpose::init);
  const std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 2}};
  const auto g = Graph::from_edges(6, edges, st::random_matrix(6, 4, rng));
  const NormalizedAdjacency adj(g);
  RngStream mask_rng(6, RngPurpose::mask);
  const auto draw = draw_masks(g, 0.3, mask_rng);
  double worst_loss = 0.0;
  std::string worst_loss_name;
  for (auto base : {BaseEncoder::linear, BaseEncoder::gconv})
    for (auto kind : {EstimatorKind::norm_jsd, EstimatorKind::jsd, EstimatorKind::info_nce}) {
      ModelSpec spec;
      spec.base_encoder = base;
      spec.hidden_dim = 5;
      spec.projector_dim = 3;
      spec.dropout_p = 0.3;
      RngStream init(7, RngPurpose::init);
      auto state = init_encoder(spec, 4, init);
      EstimatorSpec est;
      est.kind = kind;
      const double err = gradcheck(
                             [&](Tape<double>& t) {
                               RngStream drop(8, RngPurpose::dropout);
                               RngStream neg(8, RngPurpose::mask, 1);
                               const auto h = encode(t, state, spec, g.features(), &adj, true, drop);
                               return contrastive_loss(project(state, spec, h), draw, est, neg);
                             },
                             state.parameters())
                             .max_rel_error();
      if (err > worst_loss) {
        worst_loss = err;
        worst_loss_name = std::string(to_string(base)) + "/" + std::string(to_string(kind));
      }
    }
  const double secs = seconds_since(start);
  return {worst_op < 1e-4 && worst_loss < 1e-4 && secs < 30.0,
          "max rel error ops " + fmt(worst_op) + " (" + worst_op_name + "), composed loss " + fmt(worst_loss) + " (" +
              worst_loss_name + "), " + fmt(secs, 3) + " s"};
}

// ---------------------------------------------------------------------------
// 2. Loss oracles

Outcome loss_oracles() {
  constexpr double eps = 1e-7, tau = 0.5;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RngStream rng(seed, RngPurpose::mask);
    const std::size_t n = 4 + rng.below(61);
    std::vector<Edge> e;
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = u + 2; v < n; ++v)  // (u, u+1) never joins, so every Q_u is nonempty
        if (rng.bernoulli(0.2)) e.emplace_back(u, v);
    const auto g = Graph::from_edges(n, e, Tensor(Shape{n, 1}, 0.0));
    const auto draw = draw_masks(g, rng.uniform(), rng);
    const auto z = st::random_matrix(n, 1 + rng.below(8), rng);
    const auto rows = st::to_rows(z);
    Tape<double> tape;
    const auto zv = tape.constant(z);
    worst = std::max(worst, std::abs(loss_norm_jsd(zv, draw, eps).value().item() - st::naive_norm_jsd(rows, draw, eps)));
    worst = std::max(worst, std::abs(loss_jsd_ablation(zv, draw, eps).value().item() - st::naive_jsd(rows, draw, eps)));
    worst = std::max(worst,
                     std::abs(loss_info_nce_ablation(zv, draw, tau).value().item() - st::naive_info_nce(rows, draw, tau)));
  }
  return {worst <= 1e-9, "100 instances, max abs difference " + fmt(worst)};
}

// ---------------------------------------------------------------------------
// 3. Expected target similarity under masking

Outcome masking_theorem() {
  bool ok = true;
  std::string detail;
  RngStream graph_rng(3, RngPurpose::init);
  const auto g = st::random_graph(10, 0.3, 1, 2, graph_rng);
  for (double alpha : {0.2, 0.4, 0.8}) {
    RngStream rng(static_cast<std::uint64_t>(alpha * 10), RngPurpose::mask);
    const auto r = verify_theorem(g, alpha, 1.0, 0.0, 100000, rng);
    const bool within = std::abs(r.neighbor_mean - (1.0 - alpha)) <= 3.0 * r.standard_error;
    ok = ok && within && r.non_neighbor_mean == 0.0;
    detail += (detail.empty() ? "" : "; ") + std::string("alpha ") + fmt(alpha, 2) + ": neighbor mean " +
              fmt(r.neighbor_mean, 5) + " (3se " + fmt(3.0 * r.standard_error, 2) + "), non-neighbor " +
              fmt(r.non_neighbor_mean);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 4. Homophily oracles

Outcome homophily_oracles() {
  std::size_t mismatches = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RngStream rng(seed, RngPurpose::split);
    const std::size_t n = 2 + rng.below(49);
    std::vector<Edge> raw;
    const auto g = st::random_graph(n, rng.uniform(0.05, 0.5), 1, 1 + static_cast<int>(rng.below(4)), rng, &raw);
    const auto dense = st::dense_adjacency(n, raw);
    const auto [counts, ratios] = st::naive_local_homophily(dense, g.labels());
    const auto r = local_homophily(g);
    if (r.local_counts != counts) ++mismatches;
    for (std::size_t u = 0; u < n; ++u) {
      const bool same = std::isnan(ratios[u]) ? is_undefined_ratio(r.local_ratios[u]) : r.local_ratios[u] == ratios[u];
      if (!same) ++mismatches;
    }
    if (g.num_edges() > 0 && global_homophily(g) != st::naive_global_homophily(dense, g.labels())) ++mismatches;
  }
  const std::vector<Edge> path{{0, 1}, {1, 2}, {2, 3}};
  const auto p = Graph::from_edges(4, path, Tensor(Shape{4, 1}, 0.0), std::vector<int>{0, 0, 1, 1});
  const double global = global_homophily(p);
  return {mismatches == 0 && global == 2.0 / 3.0,
          "100 graphs, " + std::to_string(mismatches) + " mismatches; path global " + fmt(global, 17)};
}

// ---------------------------------------------------------------------------
// 5. SBM desk experiment

struct DeskResult {
  double probe = 0.0, raw_probe = 0.0, nmi = 0.0, raw_nmi = 0.0, seconds = 0.0;
};

DeskResult desk_run(std::uint64_t seed, const TrainConfig* override_config = nullptr) {
  const auto start = Clock::now();
  auto e = st::sbm_experiment(seed);
  const auto& config = override_config ? *override_config : e.config;
  const auto result = train(e.graph, config);
  const auto h = inference_embeddings(result.state, result.effective.model, e.graph);
  const auto splits = make_splits(e.graph.num_nodes(), {}, 20, seed);
  DeskResult r;
  r.probe = classify(h, e.graph.labels(), splits).accuracy.mean;
  r.raw_probe = classify(e.graph.features(), e.graph.labels(), splits).accuracy.mean;
  r.nmi = cluster(h, e.graph.labels(), seed).nmi;
  r.raw_nmi = cluster(e.graph.features(), e.graph.labels(), seed).nmi;
  r.seconds = seconds_since(start);
  return r;
}

Outcome desk_experiment() {
  const auto r = desk_run(0);
  return {r.probe >= 0.90 && r.probe > r.raw_probe && r.nmi >= r.raw_nmi && r.seconds < 60.0,
          "probe accuracy " + fmt(r.probe) + " vs raw " + fmt(r.raw_probe) + ", NMI " + fmt(r.nmi) + " vs raw " +
              fmt(r.raw_nmi) + ", " + fmt(r.seconds, 3) + " s"};
}

// ---------------------------------------------------------------------------
// 6. Metric oracles

Outcome metric_oracles() {
  double worst = 0.0;
  std::size_t pairs = 0;
  bool identical_ok = true;
  for (std::size_t n = 1; n <= 8; ++n) {
    const auto parts = st::set_partitions(n, 3);
    for (const auto& k : parts) {
      for (const auto& c : parts) {
        worst = std::max(worst, std::abs(nmi(k, c) - st::naive_nmi(k, c)));
        worst = std::max(worst, std::abs(homogeneity(k, c) - st::naive_homogeneity(k, c)));
        ++pairs;
      }
      if (std::set<int>(k.begin(), k.end()).size() >= 2)
        identical_ok = identical_ok && nmi(k, k) == 1.0 && homogeneity(k, k) == 1.0;
    }
  }
  RngStream rng(6, RngPurpose::probe);
  double f1_gap = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(200);
    const auto classes = 2 + rng.below(6);
    std::vector<int> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(rng.below(classes));
      pred[i] = static_cast<int>(rng.below(classes));
    }
    f1_gap = std::max(f1_gap, std::abs(micro_f1(pred, truth) - accuracy(pred, truth)));
  }
  return {worst <= 1e-9 && identical_ok && f1_gap <= 1e-12,
          std::to_string(pairs) + " partition pairs, max error " + fmt(worst) + ", identical partitions " +
              (identical_ok ? "1.0" : "not 1.0") + ", max |micro-F1 - accuracy| " + fmt(f1_gap)};
}

// ---------------------------------------------------------------------------
// 7. Discriminator bounds

Outcome discriminator_bounds() {
  RngStream rng(7, RngPurpose::init);
  std::size_t violations = 0;
  double worst_self = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t d = 1 + rng.below(32);
    const double scale = std::pow(10.0, rng.uniform(-4, 4));
    std::vector<double> a(d), b(d), na(d);
    for (std::size_t k = 0; k < d; ++k) {
      a[k] = scale * rng.normal();
      b[k] = rng.normal();
      na[k] = -a[k];
    }
    const double v = discriminator_norm<double>(a, b);
    if (!(v >= 0.0 && v <= 1.0)) ++violations;
    worst_self = std::max({worst_self, std::abs(discriminator_norm<double>(a, a) - 1.0),
                           std::abs(discriminator_norm<double>(a, na))});
  }
  return {violations == 0 && worst_self <= 1e-12,
          "10000 pairs, " + std::to_string(violations) + " out of range, max self/opposite error " + fmt(worst_self)};
}

// ---------------------------------------------------------------------------
// 8. Determinism

Outcome determinism() {
  const auto dir = st::scratch_dir("acceptance_determinism");
  const auto e = st::sbm_experiment(8);
  st::write_graph_files(e.graph, dir);
  const cli::DataPaths data{dir / "edges.txt", dir / "features.csv", dir / "labels.txt", false};
  cli::CommonOptions common;
  common.quiet = true;
  common.threads = 1;
  cli::EvalOptions eval;
  eval.raw_baseline = true;

  auto run = [&] {
    const auto t = cli::cmd_train(e.config, std::nullopt, data, dir / "model.json", common);
    const auto r = cli::cmd_eval(t.checkpoint, data, dir / "report.json", eval, common);
    return std::make_pair(st::read_text(t.checkpoint), st::read_text(r.report));
  };
  const auto first = run();
  const auto second = run();
  const bool ck = first.first == second.first, rep = first.second == second.second;
  return {ck && rep, std::string("checkpoint ") + (ck ? "identical" : "differs") + " (" +
                         std::to_string(first.first.size()) + " bytes), report " + (rep ? "identical" : "differs")};
}

// ---------------------------------------------------------------------------
// 9. Timing direction

Outcome timing_direction() {
  const auto e = st::sbm_experiment(9);
  const auto& g = e.graph;
  // Extra edges drawn with the same block structure until the mean degree reaches 20.
  auto edges = g.edges();
  RngStream rng(9, RngPurpose::init, 1);
  const auto& y = g.labels();
  const std::size_t n = g.num_nodes();
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (!g.has_edge(u, v) && rng.bernoulli(y[u] == y[v] ? 0.12 : 0.012)) edges.emplace_back(u, v);
  const auto dense = Graph::from_edges(n, edges, g.features(), y);
  const double mean_degree = 2.0 * static_cast<double>(dense.num_edges()) / static_cast<double>(n);
  const auto t = timing_harness(dense, e.config.model, 9, {50, 5});
  return {mean_degree >= 20.0 && t.gconv.median_millis >= t.linear.median_millis,
          "mean degree " + fmt(mean_degree) + ", median GCN " + fmt(t.gconv.median_millis) + " ms vs MLP " +
              fmt(t.linear.median_millis) + " ms (ratio " + fmt(t.ratio, 3) + ")"};
}

// ---------------------------------------------------------------------------
// 10. Ablation direction (informational)

Outcome ablation_direction() {
  std::vector<double> full, all;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto e = st::sbm_experiment(seed);
    full.push_back(desk_run(seed).probe);
    const auto variant = cli::apply_variant(e.config, "all", 0.2);
    all.push_back(desk_run(seed, &variant).probe);
  }
  const auto f = mean_std(full), a = mean_std(all);
  return {a.mean <= f.mean + f.std, "full " + fmt(f.mean) + " +- " + fmt(f.std) + ", all-removed " + fmt(a.mean) +
                                        " +- " + fmt(a.std) + " over 5 seeds"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    bool gated;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient integrity", true, gradient_integrity},
      {2, "loss oracle equivalence", true, loss_oracles},
      {3, "masking expectation (Monte Carlo)", true, masking_theorem},
      {4, "homophily oracles", true, homophily_oracles},
      {5, "SBM desk experiment", true, desk_experiment},
      {6, "metric oracles", true, metric_oracles},
      {7, "discriminator bounds", true, discriminator_bounds},
      {8, "determinism", true, determinism},
      {9, "timing direction", true, timing_direction},
      {10, "ablation direction", false, ablation_direction},
  };

  int gated_failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const char* verdict = o.passed ? "PASS" : "FAIL";
    std::cout << "criterion " << c.id << " [" << verdict << "]" << (c.gated ? "" : " (reported, not gated)") << " "
              << c.name << ": " << o.detail << std::endl;
    if (c.gated && !o.passed) ++gated_failures;
  }
  std::cout << (gated_failures == 0 ? "all gated criteria passed" : std::to_string(gated_failures) + " gated criteria failed")
            << std::endl;
  return gated_failures == 0 ? 0 : 1;
}
