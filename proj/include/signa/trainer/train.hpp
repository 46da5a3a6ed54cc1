#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "signa/contrast.hpp"
#include "signa/diffcore/adam.hpp"
#include "signa/diffcore/error.hpp"
#include "signa/diffcore/rng.hpp"
#include "signa/encoder.hpp"
#include "signa/graph/adjacency.hpp"
#include "signa/graph/graph.hpp"
#include "signa/trainer/config.hpp"

namespace signa {

template <std::floating_point Real>
struct BasicTrainResult {
  BasicEncoderState<Real> state;
  EffectiveConfig effective;
  /// Pre-update loss of every epoch.
  std::vector<double> loss_curve;

  double final_loss() const { return loss_curve.empty() ? 0.0 : loss_curve.back(); }
};

using TrainResult = BasicTrainResult<double>;

struct TrainOptions {
  std::ostream* log = nullptr;
};

/// Zeroes each entry independently with probability p, without rescaling.
template <std::floating_point Real>
BasicTensor<Real> mask_features(const BasicTensor<Real>& x, double p, RngStream& rng) {
  BasicTensor<Real> out = x;
  if (p <= 0.0) return out;
  for (auto& v : out.data())
    if (rng.uniform() < p) v = Real(0);
  return out;
}

/// Full-batch training. Each epoch: encode (training) -> project -> fresh
/// neighbor masks -> loss -> backward -> Adam. Randomness comes from separate
/// streams (init, dropout, mask) derived from config.seed.
template <std::floating_point Real = double>
BasicTrainResult<Real> train(const Graph& g, const TrainConfig& config, const TrainOptions& options = {}) {
  const auto effective = apply_ablation(config);
  if (g.num_nodes() < 2) throw DegenerateGraph("training needs at least two nodes");

  RngStream init_rng(config.seed, RngPurpose::init);
  RngStream dropout_rng(config.seed, RngPurpose::dropout);
  RngStream mask_rng(config.seed, RngPurpose::mask);
  RngStream negative_rng = RngStream(config.seed, RngPurpose::mask).fork(1);

  BasicTrainResult<Real> result{init_encoder<Real>(effective.model, g.num_features(), init_rng), effective, {}};
  BasicAdam<Real> adam(result.state.parameters(), {config.learning_rate, config.weight_decay});

  std::optional<BasicNormalizedAdjacency<Real>> adj;
  if (effective.model.base_encoder == BaseEncoder::gconv) adj.emplace(g);
  const auto x = g.features().template cast<Real>();

  result.loss_curve.reserve(config.num_epochs);
  for (std::size_t epoch = 0; epoch < config.num_epochs; ++epoch) {
    Tape<Real> tape;
    double value = 0.0;
    try {
      const auto x_epoch = effective.nfm_rate > 0.0 ? mask_features(x, effective.nfm_rate, dropout_rng) : x;
      const auto h = encode(tape, result.state, effective.model, x_epoch, adj ? &*adj : nullptr, true, dropout_rng);
      const auto z = project(result.state, effective.model, h);
      const auto draw = draw_masks(g, effective.mask_rate, mask_rng, epoch);
      const auto loss = contrastive_loss(z, draw, effective.estimator, negative_rng);
      value = static_cast<double>(loss.value().item());
      if (!std::isfinite(value)) throw NumericError("loss is not finite");
      tape.backward(loss);
      adam.step();
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
    } catch (const OptimizationError& e) {
      throw OptimizationError("epoch " + std::to_string(epoch) + ": " + e.what());
    } catch (const DegenerateEmbedding& e) {
      throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
    }
    result.loss_curve.push_back(value);
    if (options.log && config.log_every > 0 && (epoch % config.log_every == 0 || epoch + 1 == config.num_epochs))
      *options.log << "epoch " << epoch << " loss " << value << '\n';
  }
  return result;
}

}  // namespace signa
