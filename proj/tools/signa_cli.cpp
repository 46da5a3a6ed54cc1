// signa: command-line front end (homophily, train, eval, embed, ablate).

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "signa/cli/commands.hpp"

namespace {

using signa::cli::CommonOptions;
using signa::cli::DataPaths;
namespace fs = std::filesystem;

// Paths are not checked here: the loaders report a missing file as a data
// error (exit 2) rather than a usage error.
void add_data_options(CLI::App* cmd, DataPaths& data, bool labels_required) {
  cmd->add_option("--edges", data.edges, "Edge list (whitespace separated node pairs, '#' comments)")
      ->required();
  cmd->add_option("--features", data.features, "Node features CSV, one row per node")
      ->required();
  auto* labels = cmd->add_option_function<std::string>(
      "--labels", [&data](const std::string& p) { data.labels = p; }, "Node labels, one integer per line");
  if (labels_required) labels->required();
  cmd->add_flag("--features-header", data.features_header, "Skip the first line of the features CSV");
}

/// Training flags mirror config keys; only flags given on the command line
/// end up in the override document.
struct TrainFlags {
  std::optional<std::string> config;
  nlohmann::json overrides = nlohmann::json::object();

  void attach(CLI::App* cmd) {
    cmd->add_option_function<std::string>(
        "--config", [this](const std::string& p) { config = p; }, "JSON config (preset or custom)");
    num(cmd, "--layers", "/model/num_layers");
    str(cmd, "--base-encoder", "/model/base_encoder");
    num(cmd, "--hidden-dim", "/model/hidden_dim");
    real(cmd, "--dropout", "/model/dropout_p");
    str(cmd, "--activation", "/model/activation");
    cmd->add_option_function<bool>(
        "--layer-norm", [this](bool v) { overrides[nlohmann::json::json_pointer("/model/layer_norm")] = v; },
        "Layer normalization after each encoder layer (true/false)");
    num(cmd, "--projector-dim", "/model/projector_dim");
    str(cmd, "--projector-activation", "/model/projector_activation");
    str(cmd, "--estimator", "/estimator/kind");
    real(cmd, "--temperature", "/estimator/temperature");
    real(cmd, "--clamp-eps", "/estimator/clamp_eps");
    num(cmd, "--negative-samples", "/estimator/negative_samples");
    real(cmd, "--mask-rate", "/mask_rate");
    real(cmd, "--lr", "/learning_rate");
    real(cmd, "--weight-decay", "/weight_decay");
    num(cmd, "--epochs", "/num_epochs");
    str(cmd, "--ablation", "/ablation/kind");
    real(cmd, "--p-feat", "/ablation/p_feat");
    num(cmd, "--log-every", "/log_every");
  }

 private:
  void num(CLI::App* cmd, const std::string& flag, const std::string& ptr) {
    cmd->add_option_function<std::size_t>(
        flag, [this, ptr](std::size_t v) { overrides[nlohmann::json::json_pointer(ptr)] = v; }, "Overrides " + ptr);
  }
  void real(CLI::App* cmd, const std::string& flag, const std::string& ptr) {
    cmd->add_option_function<double>(
        flag, [this, ptr](double v) { overrides[nlohmann::json::json_pointer(ptr)] = v; }, "Overrides " + ptr);
  }
  void str(CLI::App* cmd, const std::string& flag, const std::string& ptr) {
    cmd->add_option_function<std::string>(
        flag, [this, ptr](const std::string& v) { overrides[nlohmann::json::json_pointer(ptr)] = v; },
        "Overrides " + ptr);
  }
};

void add_eval_options(CLI::App* cmd, signa::cli::EvalOptions& eval) {
  cmd->add_option("--runs", eval.runs, "Number of random probe splits")->check(CLI::PositiveNumber);
  cmd->add_option("--train-ratio", eval.ratios.train, "Probe training fraction");
  cmd->add_option("--val-ratio", eval.ratios.val, "Probe validation fraction");
  cmd->add_option("--test-ratio", eval.ratios.test, "Probe test fraction");
  cmd->add_option("--probe-lr", eval.probe.learning_rate, "Probe Adam learning rate");
  cmd->add_option("--probe-epochs", eval.probe.epochs, "Probe training epochs");
  cmd->add_option("--probe-weight-decay", eval.probe.weight_decay, "Probe weight decay");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"signa: single-view graph contrastive learning toolkit"};
  app.set_version_flag("--version", std::string(signa::kToolkitVersion));
  app.require_subcommand(1);

  CommonOptions common;
  app.add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { common.seed = s; }, "Seed for every random stream (overrides config)");
  app.add_option_function<std::string>(
         "--precision", [&](const std::string& p) { common.precision = signa::parse_precision(p); },
         "Floating-point precision")
      ->check(CLI::IsMember({"f32", "f64"}));
  app.add_option("--threads", common.threads, "Worker threads for independent evaluation runs")
      ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", common.quiet, "Suppress warnings and progress output");

  // homophily
  DataPaths homophily_data;
  std::string homophily_out;
  auto* homophily = app.add_subcommand("homophily", "Global and local homophily statistics");
  add_data_options(homophily, homophily_data, false);
  homophily->add_option("--out", homophily_out, "Output directory")->required();

  // train
  DataPaths train_data;
  TrainFlags train_flags;
  std::string train_out;
  auto* train = app.add_subcommand("train", "Train an encoder and write a checkpoint");
  add_data_options(train, train_data, false);
  train_flags.attach(train);
  train->add_option("--out", train_out, "Checkpoint path")->required();

  // eval
  DataPaths eval_data;
  std::string eval_checkpoint, eval_out, eval_mode = "classify";
  signa::cli::EvalOptions eval_options;
  auto* eval = app.add_subcommand("eval", "Evaluate a frozen encoder");
  add_data_options(eval, eval_data, false);
  eval->add_option("--checkpoint", eval_checkpoint, "Trained checkpoint")->required();
  eval->add_option("--mode", eval_mode, "classify | cluster | histograms | timing")
      ->check(CLI::IsMember({"classify", "cluster", "histograms", "timing"}));
  eval->add_option("--out", eval_out, "MetricsReport JSON path")->required();
  add_eval_options(eval, eval_options);
  eval->add_flag("--raw-baseline", eval_options.raw_baseline, "Also evaluate the raw input features");
  eval->add_option("--bins", eval_options.histogram_bins, "Histogram bins over [-1, 1]")->check(CLI::PositiveNumber);
  eval->add_option("--sample-pairs", eval_options.sample_pairs,
                   "Number of random node pairs for histograms (required above 5000 nodes)");
  eval->add_option("--repeats", eval_options.timing.repeats, "Timed inference passes")->check(CLI::PositiveNumber);
  eval->add_option("--warmup", eval_options.timing.warmup, "Untimed warmup passes");

  // embed
  DataPaths embed_data;
  std::string embed_checkpoint, embed_out;
  auto* embed = app.add_subcommand("embed", "Export inference embeddings as CSV");
  add_data_options(embed, embed_data, false);
  embed->add_option("--checkpoint", embed_checkpoint, "Trained checkpoint")->required();
  embed->add_option("--out", embed_out, "Embeddings CSV path")->required();

  // ablate
  DataPaths ablate_data;
  TrainFlags ablate_flags;
  std::string ablate_out;
  signa::cli::AblateOptions ablate_options;
  auto* ablate = app.add_subcommand("ablate", "Train and probe ablation variants with shared seeds");
  add_data_options(ablate, ablate_data, true);
  ablate_flags.attach(ablate);
  ablate->add_option("--variants", ablate_options.variants, "Variants to run")
      ->delimiter(',')
      ->check(CLI::IsMember(signa::cli::ablation_variant_names()));
  ablate->add_option("--nfm-rate", ablate_options.p_feat, "Feature masking rate for the nfm variant");
  ablate->add_option("--out", ablate_out, "Output directory")->required();
  add_eval_options(ablate, ablate_options.eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const signa::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return signa::exit_code_for(e);
  }

  try {
    if (*homophily) {
      const auto o = signa::cli::cmd_homophily(homophily_data, homophily_out, common);
      if (!common.quiet) std::cout << "wrote " << o.report.string() << '\n';
    } else if (*train) {
      const std::optional<fs::path> cfg_path =
          train_flags.config ? std::optional<fs::path>(*train_flags.config) : std::nullopt;
      const auto config = signa::cli::resolve_config(cfg_path, train_flags.overrides, common);
      const auto o = signa::cli::cmd_train(config, cfg_path, train_data, train_out, common);
      if (!common.quiet)
        std::cout << "wrote " << o.checkpoint.string() << " (final loss " << signa::format_real(o.final_loss) << ")\n";
    } else if (*eval) {
      eval_options.mode = signa::cli::parse_eval_mode(eval_mode);
      const auto o = signa::cli::cmd_eval(eval_checkpoint, eval_data, eval_out, eval_options, common);
      if (!common.quiet) std::cout << "wrote " << o.report.string() << '\n';
    } else if (*embed) {
      const auto o = signa::cli::cmd_embed(embed_checkpoint, embed_data, embed_out, common);
      if (!common.quiet) std::cout << "wrote " << o.string() << '\n';
    } else if (*ablate) {
      const std::optional<fs::path> cfg_path =
          ablate_flags.config ? std::optional<fs::path>(*ablate_flags.config) : std::nullopt;
      const auto config = signa::cli::resolve_config(cfg_path, ablate_flags.overrides, common);
      const auto o = signa::cli::cmd_ablate(config, cfg_path, ablate_data, ablate_out, ablate_options, common);
      if (!common.quiet) std::cout << "wrote " << o.table.string() << '\n';
      return o.exit_code;
    }
  } catch (const signa::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return signa::exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
