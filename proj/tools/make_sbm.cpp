// signa-sbm: writes a stochastic-block-model fixture (edges.txt, features.csv,
// labels.txt) in the formats the signa CLI reads.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "signa/graph/sbm.hpp"
#include "signa/trainer/checkpoint.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a stochastic block model fixture"};
  std::vector<std::size_t> blocks{100, 100};
  double p_in = 0.1, p_out = 0.01, separation = 1.0, sigma = 1.0;
  std::size_t dim = 64;
  std::uint64_t seed = 0;
  std::string out_dir;
  app.add_option("--blocks", blocks, "Block sizes")->delimiter(',');
  app.add_option("--p-in", p_in, "Edge probability inside a block");
  app.add_option("--p-out", p_out, "Edge probability across blocks");
  app.add_option("--dim", dim, "Feature dimension")->check(CLI::PositiveNumber);
  app.add_option("--separation", separation, "Euclidean distance between block means");
  app.add_option("--sigma", sigma, "Feature noise standard deviation");
  app.add_option("--seed", seed, "Generator seed");
  app.add_option("--out", out_dir, "Output directory")->required();
  CLI11_PARSE(app, argc, argv);

  try {
    // Separate substream: training with the same seed must not reuse these draws.
    auto rng = signa::RngStream(seed, signa::RngPurpose::init).fork(0xda7a);
    const auto g = signa::sbm_generate({blocks, p_in, p_out, signa::separated_means(blocks.size(), dim, separation), sigma}, rng);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    {
      std::ofstream out(dir / "edges.txt");
      out << "# " << g.num_nodes() << " nodes, " << g.num_edges() << " undirected edges\n";
      for (const auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
    }
    {
      std::ofstream out(dir / "features.csv");
      const auto& x = g.features();
      for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) out << (c ? "," : "") << signa::format_real(x(r, c));
        out << '\n';
      }
    }
    {
      std::ofstream out(dir / "labels.txt");
      for (auto y : g.labels()) out << y << '\n';
    }
    std::cout << "wrote " << g.num_nodes() << " nodes, " << g.num_edges() << " edges to " << dir.string() << '\n';
  } catch (const signa::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return signa::exit_code_for(e);
  }
  return 0;
}
