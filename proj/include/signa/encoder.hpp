#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "signa/diffcore/error.hpp"
#include "signa/diffcore/ops.hpp"
#include "signa/diffcore/rng.hpp"
#include "signa/diffcore/tape.hpp"
#include "signa/graph/adjacency.hpp"
#include "signa/graph/graph.hpp"

namespace signa {

enum class BaseEncoder { linear, gconv };

inline std::string_view to_string(BaseEncoder b) { return b == BaseEncoder::linear ? "linear" : "gconv"; }

inline BaseEncoder parse_base_encoder(std::string_view s) {
  if (s == "linear" || s == "mlp") return BaseEncoder::linear;
  if (s == "gconv" || s == "gcn") return BaseEncoder::gconv;
  throw ConfigError("unknown base encoder '" + std::string(s) + "'");
}

inline constexpr double kLayerNormEps = 1e-5;

/// Architecture of the L-layer encoder and its two-layer projector.
struct ModelSpec {
  std::size_t num_layers = 2;
  BaseEncoder base_encoder = BaseEncoder::linear;
  std::size_t hidden_dim = 512;
  double dropout_p = 0.4;
  Activation activation{ActivationKind::prelu, kPreluInitSlope};
  bool layer_norm = false;
  std::size_t projector_dim = 256;
  Activation projector_activation{ActivationKind::elu, 0.0};

  bool operator==(const ModelSpec&) const = default;

  /// Returns one message per violated constraint.
  std::vector<std::string> validate() const {
    std::vector<std::string> issues;
    if (num_layers < 1) issues.push_back("model.num_layers must be >= 1");
    if (hidden_dim < 1) issues.push_back("model.hidden_dim must be >= 1");
    if (projector_dim < 1) issues.push_back("model.projector_dim must be >= 1");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) issues.push_back("model.dropout_p must lie in [0, 1)");
    return issues;
  }
};

/// Trainable parameters. Layer l maps d_{l-1} -> hidden_dim with d_0 = F.
/// Linear/GConv layers carry a bias only when layer norm is off.
template <std::floating_point Real>
struct BasicEncoderState {
  using Param = BasicParameter<Real>;

  struct Layer {
    Param weight;
    std::optional<Param> bias;
    std::optional<Param> ln_gain;
    std::optional<Param> ln_bias;
    std::optional<Param> prelu_slope;
  };

  std::vector<Layer> layers;
  std::optional<Param> projector_weight1;
  std::optional<Param> projector_weight2;
  std::optional<Param> projector_prelu_slope;

  /// Stable order: layers first, then the projector.
  std::vector<Param*> parameters() {
    std::vector<Param*> out;
    for (auto& l : layers) {
      out.push_back(&l.weight);
      for (auto* p : {&l.bias, &l.ln_gain, &l.ln_bias, &l.prelu_slope})
        if (*p) out.push_back(&**p);
    }
    for (auto* p : {&projector_weight1, &projector_weight2, &projector_prelu_slope})
      if (*p) out.push_back(&**p);
    return out;
  }

  std::vector<const Param*> parameters() const {
    std::vector<const Param*> out;
    for (auto* p : const_cast<BasicEncoderState*>(this)->parameters()) out.push_back(p);
    return out;
  }

  std::size_t input_dim() const { return layers.at(0).weight.value.rows(); }
};

using EncoderState = BasicEncoderState<double>;

namespace encoder_detail {

template <std::floating_point Real>
BasicTensor<Real> glorot_uniform(std::size_t fan_in, std::size_t fan_out, RngStream& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  BasicTensor<Real> w(Shape{fan_in, fan_out});
  for (auto& v : w.data()) v = static_cast<Real>(rng.uniform(-bound, bound));
  return w;
}

template <std::floating_point Real>
std::optional<BasicParameter<Real>> slope_param(const Activation& act, const std::string& name) {
  if (act.kind != ActivationKind::prelu) return std::nullopt;
  return BasicParameter<Real>(name, BasicTensor<Real>(Shape{1}, static_cast<Real>(act.slope)));
}

}  // namespace encoder_detail

/// Glorot-uniform weights from `rng` (layer by layer, then projector), zero
/// biases, unit layer-norm gains, prelu slopes at their configured initial value.
template <std::floating_point Real = double>
BasicEncoderState<Real> init_encoder(const ModelSpec& spec, std::size_t input_dim, RngStream& rng) {
  if (auto issues = spec.validate(); !issues.empty()) throw ConfigError(issues);
  if (input_dim < 1) throw ConfigError("encoder input dimension must be >= 1");
  BasicEncoderState<Real> s;
  std::size_t in = input_dim;
  for (std::size_t l = 0; l < spec.num_layers; ++l) {
    const std::string prefix = "encoder." + std::to_string(l) + ".";
    typename BasicEncoderState<Real>::Layer layer{
        BasicParameter<Real>(prefix + "weight", encoder_detail::glorot_uniform<Real>(in, spec.hidden_dim, rng)),
        std::nullopt, std::nullopt, std::nullopt, std::nullopt};
    const Shape vec{spec.hidden_dim};
    if (spec.layer_norm) {
      layer.ln_gain.emplace(prefix + "ln_gain", BasicTensor<Real>(vec, Real(1)));
      layer.ln_bias.emplace(prefix + "ln_bias", BasicTensor<Real>(vec, Real(0)));
    } else {
      layer.bias.emplace(prefix + "bias", BasicTensor<Real>(vec, Real(0)));
    }
    layer.prelu_slope = encoder_detail::slope_param<Real>(spec.activation, prefix + "prelu_slope");
    s.layers.push_back(std::move(layer));
    in = spec.hidden_dim;
  }
  s.projector_weight1.emplace("projector.0.weight",
                              encoder_detail::glorot_uniform<Real>(spec.hidden_dim, spec.projector_dim, rng));
  s.projector_weight2.emplace("projector.1.weight",
                              encoder_detail::glorot_uniform<Real>(spec.projector_dim, spec.projector_dim, rng));
  s.projector_prelu_slope = encoder_detail::slope_param<Real>(spec.projector_activation, "projector.prelu_slope");
  return s;
}

/// Per layer: dropout -> Linear or GConv -> activation -> layer norm (if
/// enabled). Dropout draws from `rng` only when `training` and p > 0.
template <std::floating_point Real>
Var<Real> encode(Tape<Real>& tape, BasicEncoderState<Real>& state, const ModelSpec& spec, const BasicTensor<Real>& x,
                 const BasicNormalizedAdjacency<Real>* adj, bool training, RngStream& rng) {
  if (spec.base_encoder == BaseEncoder::gconv && adj == nullptr)
    throw ConfigError("gconv base encoder needs a normalized adjacency");
  if (state.layers.size() != spec.num_layers) throw ConfigError("encoder state has the wrong layer count");
  x.require_matrix("encode");
  if (x.cols() != state.input_dim())
    throw DimensionError("encode: features have " + std::to_string(x.cols()) + " columns, encoder expects " +
                         std::to_string(state.input_dim()));
  Var<Real> h = tape.constant(x);
  for (auto& layer : state.layers) {
    h = ad::dropout(h, spec.dropout_p, rng, training);
    h = ad::matmul(h, tape.param(layer.weight));
    if (spec.base_encoder == BaseEncoder::gconv) h = ad::spmm(*adj, h);
    if (layer.bias) h = ad::add_row_vector(h, tape.param(*layer.bias));
    if (layer.prelu_slope) {
      const auto slope = tape.param(*layer.prelu_slope);
      h = ad::activation(h, spec.activation, &slope);
    } else {
      h = ad::activation(h, spec.activation);
    }
    if (spec.layer_norm) {
      if (!layer.ln_gain || !layer.ln_bias) throw ConfigError("layer norm enabled but parameters are missing");
      h = ad::layer_norm(h, tape.param(*layer.ln_gain), tape.param(*layer.ln_bias), static_cast<Real>(kLayerNormEps));
    }
  }
  return h;
}

/// z = sigma(h W1) W2, no activation after the second layer.
template <std::floating_point Real>
Var<Real> project(BasicEncoderState<Real>& state, const ModelSpec& spec, const Var<Real>& h) {
  if (!state.projector_weight1 || !state.projector_weight2) throw ConfigError("encoder state has no projector");
  auto& tape = h.tape();
  auto z = ad::matmul(h, tape.param(*state.projector_weight1));
  if (state.projector_prelu_slope) {
    const auto slope = tape.param(*state.projector_prelu_slope);
    z = ad::activation(z, spec.projector_activation, &slope);
  } else {
    z = ad::activation(z, spec.projector_activation);
  }
  return ad::matmul(z, tape.param(*state.projector_weight2));
}

/// Frozen-encoder output H (never the projection). Consults no randomness.
template <std::floating_point Real>
BasicTensor<Real> inference_embeddings(const BasicEncoderState<Real>& state, const ModelSpec& spec, const Graph& g,
                                       const BasicNormalizedAdjacency<Real>* adj = nullptr) {
  std::optional<BasicNormalizedAdjacency<Real>> owned;
  if (spec.base_encoder == BaseEncoder::gconv && adj == nullptr) {
    owned.emplace(g);
    adj = &*owned;
  }
  // encode() only reads parameters when no backward pass runs.
  auto& mutable_state = const_cast<BasicEncoderState<Real>&>(state);
  RngStream unused(0, RngPurpose::dropout);
  Tape<Real> tape;
  const auto x = g.features().template cast<Real>();
  return encode(tape, mutable_state, spec, x, adj, false, unused).value();
}

}  // namespace signa
