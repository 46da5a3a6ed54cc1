#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "signa/cli/manifest.hpp"
#include "signa/diffcore/error.hpp"
#include "signa/evaluate/histograms.hpp"
#include "signa/evaluate/report.hpp"
#include "signa/graph/homophily.hpp"
#include "signa/graph/io.hpp"
#include "signa/trainer/checkpoint.hpp"
#include "signa/trainer/config.hpp"
#include "signa/trainer/train.hpp"

namespace signa::cli {

namespace fs = std::filesystem;

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  std::optional<Precision> precision;
  std::size_t threads = 1;
  bool quiet = false;
};

struct DataPaths {
  fs::path edges;
  fs::path features;
  std::optional<fs::path> labels;
  bool features_header = false;
};

namespace detail {

inline Graph load(const DataPaths& data, const CommonOptions& common, RunManifest* manifest) {
  auto g = load_graph(data.edges, data.features, data.labels, {data.features_header, common.quiet});
  if (manifest) {
    manifest->add_input("edges", data.edges);
    manifest->add_input("features", data.features);
    if (data.labels) manifest->add_input("labels", *data.labels);
  }
  return g;
}

inline std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Error::Category::data, "cannot write '" + path.string() + "'");
  return out;
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

inline fs::path sibling(const fs::path& path, const std::string& suffix) {
  return path.parent_path() / (path.stem().string() + suffix);
}

inline Precision checkpoint_precision(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open '" + path.string() + "'");
  try {
    const auto j = nlohmann::json::parse(in);
    return parse_precision(j.at("config").at("precision").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("corrupt payload in '" + path.string() + "': " + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError("corrupt payload in '" + path.string() + "': " + e.what());
  }
}

/// Frozen encoder loaded at the requested (or stored) precision, with
/// embeddings returned in double.
struct LoadedEncoder {
  TrainConfig config;
  EffectiveConfig effective;
  Tensor embeddings;
};

inline LoadedEncoder embed_with(const fs::path& checkpoint, const Graph& g, const CommonOptions& common) {
  const auto precision = common.precision.value_or(checkpoint_precision(checkpoint));
  std::ostream* warn = common.quiet ? nullptr : &std::cerr;
  auto run = [&]<std::floating_point Real>() {
    const auto ck = load_checkpoint<Real>(checkpoint, warn);
    if (g.num_features() != ck.input_dim)
      throw Error(Error::Category::data, "graph has " + std::to_string(g.num_features()) +
                                             " feature columns, checkpoint expects " + std::to_string(ck.input_dim));
    const auto effective = apply_ablation(ck.config);
    return LoadedEncoder{ck.config, effective,
                         inference_embeddings(ck.state, effective.model, g).template cast<double>()};
  };
  return precision == Precision::f32 ? run.template operator()<float>() : run.template operator()<double>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// homophily

struct HomophilyOutputs {
  fs::path report, local_csv, count_csv, ratio_csv, manifest;
};

/// Writes homophily.json, local_homophily.csv, count_histogram.csv,
/// ratio_histogram.csv and manifest.json into `out_dir`.
inline HomophilyOutputs cmd_homophily(const DataPaths& data, const fs::path& out_dir, const CommonOptions& common = {}) {
  if (!data.labels) throw AnalysisError("homophily needs a labels file (--labels)");
  RunManifest manifest("homophily");
  const auto g = detail::load(data, common, &manifest);
  const double global = global_homophily(g);
  const auto local = local_homophily(g);

  HomophilyOutputs o{out_dir / "homophily.json", out_dir / "local_homophily.csv", out_dir / "count_histogram.csv",
                     out_dir / "ratio_histogram.csv", out_dir / "manifest.json"};
  fs::create_directories(out_dir);
  detail::write_json(o.report, {{"num_nodes", g.num_nodes()},
                                {"num_edges", g.num_edges()},
                                {"global_ratio", global},
                                {"isolated_nodes", local.isolated_nodes},
                                {"count_histogram", local.count_histogram},
                                {"ratio_histogram", local.ratio_histogram}});
  {
    auto out = detail::open_out(o.local_csv);
    out << "node,degree,same_label_neighbors,ratio\n";
    for (std::size_t u = 0; u < g.num_nodes(); ++u) {
      out << u << ',' << g.degree(u) << ',' << local.local_counts[u] << ',';
      if (!is_undefined_ratio(local.local_ratios[u])) out << format_real(local.local_ratios[u]);
      out << '\n';
    }
  }
  {
    auto out = detail::open_out(o.count_csv);
    out << "same_label_neighbors,nodes\n";
    for (std::size_t b = 0; b < local.count_histogram.size(); ++b)
      out << (b + 1 == local.count_histogram.size() ? std::to_string(b) + "+" : std::to_string(b)) << ','
          << local.count_histogram[b] << '\n';
  }
  {
    auto out = detail::open_out(o.ratio_csv);
    out << "bin_lo,bin_hi,nodes\n";
    const double w = 1.0 / static_cast<double>(local.ratio_histogram.size());
    for (std::size_t b = 0; b < local.ratio_histogram.size(); ++b)
      out << format_real(w * static_cast<double>(b)) << ',' << format_real(w * static_cast<double>(b + 1)) << ','
          << local.ratio_histogram[b] << '\n';
  }
  for (const auto& p : {o.report, o.local_csv, o.count_csv, o.ratio_csv}) manifest.add_output(p);
  manifest.write(o.manifest);
  return o;
}

// ---------------------------------------------------------------------------
// train

/// Precedence: `overrides` (command-line flags) > config file > defaults.
inline TrainConfig resolve_config(const std::optional<fs::path>& config_path, const nlohmann::json& overrides,
                                  const CommonOptions& common) {
  TrainConfig base = config_path ? load_config(*config_path) : TrainConfig{};
  auto merged = to_json(base);
  if (!overrides.is_null()) merged.merge_patch(overrides);
  if (common.seed) merged["seed"] = *common.seed;
  if (common.precision) merged["precision"] = std::string(to_string(*common.precision));
  return config_from_json(merged);
}

struct TrainOutputs {
  fs::path checkpoint, loss_curve, manifest;
  TrainConfig config;
  double final_loss = 0.0;
};

/// Trains and writes the checkpoint, `<stem>_loss.csv` and
/// `<stem>_manifest.json` next to it.
inline TrainOutputs cmd_train(const TrainConfig& config, const std::optional<fs::path>& config_path,
                              const DataPaths& data, const fs::path& checkpoint, const CommonOptions& common = {}) {
  RunManifest manifest("train");
  const auto g = detail::load(data, common, &manifest);
  TrainOptions options;
  if (!common.quiet && config.log_every > 0) options.log = &std::cerr;

  TrainOutputs o{checkpoint, detail::sibling(checkpoint, "_loss.csv"), detail::sibling(checkpoint, "_manifest.json"),
                 config, 0.0};
  std::vector<double> curve;
  auto run = [&]<std::floating_point Real>() {
    auto result = train<Real>(g, config, options);
    curve = result.loss_curve;
    o.final_loss = result.final_loss();
    if (checkpoint.has_parent_path()) fs::create_directories(checkpoint.parent_path());
    save_checkpoint(result.state, config, o.final_loss, config.num_epochs, checkpoint);
  };
  if (config.precision == Precision::f32)
    run.template operator()<float>();
  else
    run.template operator()<double>();

  {
    auto out = detail::open_out(o.loss_curve);
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < curve.size(); ++e) out << e << ',' << format_real(curve[e]) << '\n';
  }
  const auto effective = apply_ablation(config);
  manifest.set_config(config_path, to_json(config));
  manifest.set("effective", {{"dropout_p", effective.model.dropout_p},
                             {"mask_rate", effective.mask_rate},
                             {"nfm_rate", effective.nfm_rate},
                             {"estimator", std::string(to_string(effective.estimator.kind))}});
  manifest.set("final_loss", o.final_loss);
  manifest.set_seed(config.seed);
  manifest.add_output(o.checkpoint);
  manifest.add_output(o.loss_curve);
  manifest.write(o.manifest);
  return o;
}

// ---------------------------------------------------------------------------
// eval

enum class EvalMode { classify, cluster, histograms, timing };

inline EvalMode parse_eval_mode(std::string_view s) {
  if (s == "classify") return EvalMode::classify;
  if (s == "cluster") return EvalMode::cluster;
  if (s == "histograms") return EvalMode::histograms;
  if (s == "timing") return EvalMode::timing;
  throw InvalidArgument("unknown eval mode '" + std::string(s) + "' (classify|cluster|histograms|timing)");
}

inline std::string_view to_string(EvalMode m) {
  switch (m) {
    case EvalMode::classify: return "classify";
    case EvalMode::cluster: return "cluster";
    case EvalMode::histograms: return "histograms";
    case EvalMode::timing: return "timing";
  }
  return "classify";
}

struct EvalOptions {
  EvalMode mode = EvalMode::classify;
  std::size_t runs = 20;
  SplitRatios ratios;
  ProbeConfig probe;
  bool raw_baseline = false;
  std::size_t histogram_bins = 20;
  std::size_t sample_pairs = 0;
  TimingOptions timing;
};

struct EvalOutputs {
  fs::path report, manifest;
  std::optional<fs::path> histogram_csv;
  MetricsReport metrics;
};

/// Writes the MetricsReport to `out_report` plus `<stem>_manifest.json`;
/// histogram mode also writes `<stem>_similarity.csv`. Without --seed the
/// evaluation seed is the training seed stored in the checkpoint.
inline EvalOutputs cmd_eval(const fs::path& checkpoint, const DataPaths& data, const fs::path& out_report,
                            const EvalOptions& options, const CommonOptions& common = {}) {
  RunManifest manifest("eval");
  manifest.add_input("checkpoint", checkpoint);
  const auto g = detail::load(data, common, &manifest);
  const bool needs_labels = options.mode == EvalMode::classify || options.mode == EvalMode::cluster;
  if (needs_labels && !g.has_labels())
    throw AnalysisError(std::string(to_string(options.mode)) + " needs a labels file (--labels)");

  const auto enc = detail::embed_with(checkpoint, g, common);
  const std::uint64_t seed = common.seed.value_or(enc.config.seed);

  EvalOutputs o{out_report, detail::sibling(out_report, "_manifest.json"), std::nullopt, {}};
  auto& report = o.metrics;
  report.mode = std::string(to_string(options.mode));
  report.config = to_json(enc.config);
  report.seeds = {{"train", enc.config.seed}, {"eval", seed}};
  if (const auto curve = detail::sibling(checkpoint, "_loss.csv"); fs::exists(curve))
    report.loss_curve_path = curve.string();

  std::ostream* warn = common.quiet ? nullptr : &std::cerr;
  switch (options.mode) {
    case EvalMode::classify: {
      if (options.runs == 0) throw InvalidArgument("--runs must be >= 1");
      const auto splits = make_splits(g.num_nodes(), options.ratios, options.runs, seed);
      const auto k = g.num_classes();
      report.classification = classify(enc.embeddings, g.labels(), splits, options.probe, k, common.threads, warn);
      if (options.raw_baseline)
        report.baseline_classification = classify(g.features(), g.labels(), splits, options.probe, k, common.threads);
      report.seeds["split_runs"] = options.runs;
      break;
    }
    case EvalMode::cluster:
      report.clustering = cluster(enc.embeddings, g.labels(), seed);
      if (options.raw_baseline) report.baseline_clustering = cluster(g.features(), g.labels(), seed);
      break;
    case EvalMode::histograms: {
      const auto h = similarity_histograms(enc.embeddings, g, {options.histogram_bins, options.sample_pairs, seed});
      o.histogram_csv = detail::sibling(out_report, "_similarity.csv");
      auto out = detail::open_out(*o.histogram_csv);
      h.write_csv(out);
      out.close();
      break;
    }
    case EvalMode::timing:
      report.timing = timing_harness<double>(g, enc.effective.model, seed, options.timing);
      break;
  }

  auto j = report.to_json();
  if (o.histogram_csv) j["histogram_csv"] = o.histogram_csv->string();
  detail::write_json(o.report, j);
  manifest.set_config(std::nullopt, report.config);
  manifest.set_seed(seed);
  manifest.set("mode", report.mode);
  manifest.add_output(o.report);
  if (o.histogram_csv) manifest.add_output(*o.histogram_csv);
  manifest.write(o.manifest);
  return o;
}

// ---------------------------------------------------------------------------
// embed

inline fs::path cmd_embed(const fs::path& checkpoint, const DataPaths& data, const fs::path& out_csv,
                          const CommonOptions& common = {}) {
  RunManifest manifest("embed");
  manifest.add_input("checkpoint", checkpoint);
  const auto g = detail::load(data, common, &manifest);
  const auto enc = detail::embed_with(checkpoint, g, common);
  if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
  write_matrix_csv(enc.embeddings, out_csv, "h");
  manifest.set_config(std::nullopt, to_json(enc.config));
  manifest.set_seed(enc.config.seed);
  manifest.add_output(out_csv);
  manifest.write(detail::sibling(out_csv, "_manifest.json"));
  return out_csv;
}

// ---------------------------------------------------------------------------
// ablate

/// Variant names accepted by `ablate`: the trainer ablations plus estimator
/// swaps and "all", which drops dropout, stochastic masking and the
/// normalized discriminator together.
inline const std::vector<std::string>& ablation_variant_names() {
  static const std::vector<std::string> names{"none",    "no_dropout", "nfm", "no_stoch_mask",
                                              "all_mask", "jsd",        "info_nce", "all"};
  return names;
}

inline TrainConfig apply_variant(TrainConfig c, const std::string& variant, double p_feat) {
  c.ablation = {};
  if (variant == "jsd") {
    c.estimator.kind = EstimatorKind::jsd;
  } else if (variant == "info_nce") {
    c.estimator.kind = EstimatorKind::info_nce;
    c.estimator.negative_samples = 0;
  } else if (variant == "all") {
    c.ablation.kind = AblationKind::no_dropout;
    c.mask_rate = 0.0;
    c.estimator.kind = EstimatorKind::jsd;
  } else {
    c.ablation.kind = parse_ablation(variant);
    if (c.ablation.kind == AblationKind::nfm) c.ablation.p_feat = p_feat;
  }
  return c;
}

struct AblationRow {
  std::string variant;
  bool ok = false;
  std::string error;
  int exit_code = 0;
  double final_loss = 0.0;
  ClassificationSummary summary;
};

struct AblateOptions {
  std::vector<std::string> variants{"none", "no_dropout", "nfm", "no_stoch_mask", "all_mask", "jsd", "info_nce", "all"};
  double p_feat = 0.2;
  EvalOptions eval;
};

struct AblateOutputs {
  fs::path table, manifest;
  std::vector<AblationRow> rows;
  /// First failing variant's exit code, 0 when every variant succeeded.
  int exit_code = 0;
};

/// Trains and probes every variant with the base config's seed. Failures are
/// recorded in the table and the remaining variants still run.
inline AblateOutputs cmd_ablate(const TrainConfig& base, const std::optional<fs::path>& config_path,
                                const DataPaths& data, const fs::path& out_dir, const AblateOptions& options,
                                const CommonOptions& common = {}) {
  if (options.variants.empty()) throw InvalidArgument("ablate needs at least one variant");
  for (const auto& v : options.variants)
    if (std::find(ablation_variant_names().begin(), ablation_variant_names().end(), v) ==
        ablation_variant_names().end())
      throw InvalidArgument("unknown ablation variant '" + v + "'");
  RunManifest manifest("ablate");
  const auto g = detail::load(data, common, &manifest);
  if (!g.has_labels()) throw AnalysisError("ablate needs a labels file (--labels)");
  fs::create_directories(out_dir);
  const std::uint64_t eval_seed = common.seed.value_or(base.seed);
  const auto splits = make_splits(g.num_nodes(), options.eval.ratios, options.eval.runs, eval_seed);

  AblateOutputs o{out_dir / "ablation.csv", out_dir / "manifest.json", {}, 0};
  nlohmann::json variant_configs = nlohmann::json::object();
  for (const auto& variant : options.variants) {
    AblationRow row;
    row.variant = variant;
    try {
      const auto cfg = apply_variant(base, variant, options.p_feat);
      variant_configs[variant] = to_json(cfg);
      auto run = [&]<std::floating_point Real>() {
        auto result = train<Real>(g, cfg);
        row.final_loss = result.final_loss();
        const auto h = inference_embeddings(result.state, result.effective.model, g).template cast<double>();
        row.summary = classify(h, g.labels(), splits, options.eval.probe, g.num_classes(), common.threads);
      };
      if (cfg.precision == Precision::f32)
        run.template operator()<float>();
      else
        run.template operator()<double>();
      row.ok = true;
    } catch (const Error& e) {
      row.error = e.what();
      row.exit_code = exit_code_for(e);
      if (!common.quiet) std::cerr << "variant " << variant << " failed: " << e.what() << '\n';
      if (o.exit_code == 0) o.exit_code = row.exit_code;
    }
    o.rows.push_back(std::move(row));
  }

  {
    auto out = detail::open_out(o.table);
    out << "variant,status,micro_f1_mean,micro_f1_std,accuracy_mean,accuracy_std,final_loss,error\n";
    for (const auto& r : o.rows) {
      out << r.variant << ',' << (r.ok ? "ok" : "failed") << ',';
      if (r.ok) {
        out << format_real(r.summary.micro_f1.mean) << ',' << format_real(r.summary.micro_f1.std) << ','
            << format_real(r.summary.accuracy.mean) << ',' << format_real(r.summary.accuracy.std) << ','
            << format_real(r.final_loss) << ',';
      } else {
        out << ",,,,,";
      }
      std::string err = r.error;
      for (auto& ch : err)
        if (ch == '"' || ch == '\n' || ch == ',') ch = ' ';
      out << err << '\n';
    }
  }
  manifest.set_config(config_path, to_json(base));
  manifest.set("variant_configs", variant_configs);
  manifest.set("eval_seed", eval_seed);
  manifest.set("runs", options.eval.runs);
  manifest.set_seed(base.seed);
  manifest.add_output(o.table);
  manifest.write(o.manifest);
  return o;
}

}  // namespace signa::cli
