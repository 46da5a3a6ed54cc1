#include <gtest/gtest.h>

#include "support.hpp"

using namespace signa;
namespace st = signa::testing;

namespace {

Tensor identity(std::size_t n) {
  Tensor t(Shape{n, n}, 0.0);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

ModelSpec single_layer(std::size_t dim, BaseEncoder base) {
  ModelSpec spec;
  spec.num_layers = 1;
  spec.base_encoder = base;
  spec.hidden_dim = dim;
  spec.dropout_p = 0.0;
  spec.activation = parse_activation("relu");
  spec.projector_dim = dim;
  spec.projector_activation = parse_activation("relu");
  return spec;
}

constexpr const NormalizedAdjacency* kNoAdjacency = nullptr;

Graph pair_graph(Tensor x) {
  const std::vector<Edge> e{{0, 1}};
  return Graph::from_edges(2, e, std::move(x));
}

}  // namespace

TEST(Encoder, ParameterLayout) {
  RngStream rng(0, RngPurpose::init);
  ModelSpec spec;
  spec.num_layers = 3;
  spec.hidden_dim = 6;
  spec.projector_dim = 4;
  auto s = init_encoder(spec, 5, rng);
  EXPECT_EQ(s.input_dim(), 5u);
  EXPECT_EQ(s.layers[0].weight.value.shape(), (Shape{5, 6}));
  EXPECT_EQ(s.layers[2].weight.value.shape(), (Shape{6, 6}));
  EXPECT_EQ(s.projector_weight1->value.shape(), (Shape{6, 4}));
  EXPECT_EQ(s.projector_weight2->value.shape(), (Shape{4, 4}));
  // prelu encoder: weight, bias, slope per layer; elu projector: two weights.
  EXPECT_EQ(s.parameters().size(), 3u * 3u + 2u);
  EXPECT_DOUBLE_EQ(s.layers[1].prelu_slope->value[0], kPreluInitSlope);

  spec.layer_norm = true;
  auto ln = init_encoder(spec, 5, rng);
  EXPECT_FALSE(ln.layers[0].bias.has_value());
  EXPECT_TRUE(ln.layers[0].ln_gain.has_value());
  EXPECT_EQ(ln.parameters().size(), 3u * 4u + 2u);
}

TEST(Encoder, GlorotBounds) {
  RngStream rng(1, RngPurpose::init);
  ModelSpec spec;
  spec.hidden_dim = 30;
  const auto s = init_encoder(spec, 10, rng);
  const double bound = std::sqrt(6.0 / 40.0);
  double max_abs = 0.0;
  for (auto v : s.layers[0].weight.value.storage()) max_abs = std::max(max_abs, std::abs(v));
  EXPECT_LE(max_abs, bound);
  EXPECT_GT(max_abs, 0.8 * bound);
}

TEST(Encoder, RejectsInvalidSpecs) {
  RngStream rng(0, RngPurpose::init);
  ModelSpec spec;
  spec.num_layers = 0;
  spec.dropout_p = 1.0;
  try {
    init_encoder(spec, 3, rng);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.issues().size(), 2u);
  }
  EXPECT_THROW(init_encoder(ModelSpec{}, 0, rng), ConfigError);
}

TEST(Encoder, IdentityComposition) {
  RngStream rng(0, RngPurpose::init);
  const auto spec = single_layer(3, BaseEncoder::linear);
  auto s = init_encoder(spec, 3, rng);
  s.layers[0].weight.value = identity(3);
  const auto x = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  Tape<double> tape;
  const auto h = encode(tape, s, spec, x, kNoAdjacency, true, rng);
  EXPECT_EQ(h.value().storage(), x.storage());
}

TEST(Encoder, GconvPropagates) {
  RngStream rng(0, RngPurpose::init);
  const auto spec = single_layer(1, BaseEncoder::gconv);
  auto s = init_encoder(spec, 1, rng);
  s.layers[0].weight.value = identity(1);
  const auto g = pair_graph(Tensor::matrix({{2}, {4}}));
  const auto h = inference_embeddings(s, spec, g);
  EXPECT_DOUBLE_EQ(h(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(h(1, 0), 3.0);
}

TEST(Encoder, GconvWithoutAdjacencyIsConfigError) {
  RngStream rng(0, RngPurpose::init);
  const auto spec = single_layer(1, BaseEncoder::gconv);
  auto s = init_encoder(spec, 1, rng);
  Tape<double> tape;
  EXPECT_THROW(encode(tape, s, spec, Tensor::matrix({{1}}), kNoAdjacency, false, rng), ConfigError);
}

TEST(Encoder, FeatureWidthMismatch) {
  RngStream rng(0, RngPurpose::init);
  const auto spec = single_layer(2, BaseEncoder::linear);
  auto s = init_encoder(spec, 2, rng);
  Tape<double> tape;
  EXPECT_THROW(encode(tape, s, spec, Tensor::matrix({{1, 2, 3}}), kNoAdjacency, false, rng), DimensionError);
}

TEST(Projector, IdentityAndZero) {
  RngStream rng(0, RngPurpose::init);
  const auto spec = single_layer(2, BaseEncoder::linear);
  auto s = init_encoder(spec, 2, rng);
  s.projector_weight1->value = identity(2);
  s.projector_weight2->value = identity(2);
  const auto hv = Tensor::matrix({{0.5, 1.5}, {2.0, 3.0}});
  {
    Tape<double> tape;
    EXPECT_EQ(project(s, spec, tape.constant(hv)).value().storage(), hv.storage());
  }
  s.projector_weight2->value = Tensor(Shape{2, 2}, 0.0);
  {
    Tape<double> tape;
    for (auto v : project(s, spec, tape.constant(hv)).value().storage()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Encoder, InferenceIsDeterministic) {
  RngStream rng(5, RngPurpose::init);
  const auto g = st::random_graph(20, 0.2, 4, 2, rng);
  for (auto base : {BaseEncoder::linear, BaseEncoder::gconv}) {
    ModelSpec spec;
    spec.base_encoder = base;
    spec.hidden_dim = 8;
    spec.projector_dim = 4;
    RngStream init(7, RngPurpose::init);
    const auto s = init_encoder(spec, 4, init);
    const auto a = inference_embeddings(s, spec, g);
    const auto b = inference_embeddings(s, spec, g);
    EXPECT_EQ(a.storage(), b.storage());
    EXPECT_EQ(a.shape(), (Shape{20, 8}));
  }
}

TEST(Encoder, TrainingWithoutDropoutMatchesInference) {
  RngStream rng(6, RngPurpose::init);
  const auto g = st::random_graph(15, 0.3, 5, 2, rng);
  for (auto base : {BaseEncoder::linear, BaseEncoder::gconv}) {
    ModelSpec spec;
    spec.base_encoder = base;
    spec.hidden_dim = 6;
    spec.projector_dim = 3;
    spec.dropout_p = 0.0;
    spec.layer_norm = true;
    auto s = init_encoder(spec, 5, rng);
    const auto adj = normalized_adjacency(g);
    RngStream drop(1, RngPurpose::dropout);
    Tape<double> tape;
    const auto h = encode(tape, s, spec, g.features(), &adj, true, drop);
    EXPECT_EQ(h.value().storage(), inference_embeddings(s, spec, g).storage());
  }
}

TEST(Encoder, DropoutOnlyAffectsTraining) {
  RngStream rng(8, RngPurpose::init);
  const auto g = st::random_graph(15, 0.3, 5, 2, rng);
  ModelSpec spec;
  spec.hidden_dim = 6;
  spec.projector_dim = 3;
  spec.dropout_p = 0.5;
  auto s = init_encoder(spec, 5, rng);
  auto run = [&](std::uint64_t seed) {
    RngStream drop(seed, RngPurpose::dropout);
    Tape<double> tape;
    return encode(tape, s, spec, g.features(), kNoAdjacency, true, drop).value();
  };
  EXPECT_EQ(run(1).storage(), run(1).storage());
  EXPECT_NE(run(1).storage(), run(2).storage());
  EXPECT_NE(run(1).storage(), inference_embeddings(s, spec, g).storage());
}

struct GradCase {
  BaseEncoder base;
  bool layer_norm;
  const char* activation;
};

class EncoderGradients : public ::testing::TestWithParam<GradCase> {};

TEST_P(EncoderGradients, MatchCentralDifferences) {
  const auto c = GetParam();
  RngStream rng(11, RngPurpose::init);
  const auto g = st::random_graph(6, 0.4, 3, 2, rng);
  ModelSpec spec;
  spec.base_encoder = c.base;
  spec.num_layers = 2;
  spec.hidden_dim = 4;
  spec.projector_dim = 3;
  spec.dropout_p = 0.3;
  spec.layer_norm = c.layer_norm;
  spec.activation = parse_activation(c.activation);
  auto s = init_encoder(spec, 3, rng);
  const auto adj = normalized_adjacency(g);
  const auto w = st::random_matrix(6, 3, rng);
  const auto report = gradcheck(
      [&](Tape<double>& t) {
        RngStream drop(4, RngPurpose::dropout);  // same dropout mask for every evaluation
        const auto h = encode(t, s, spec, g.features(), &adj, true, drop);
        return ad::sum(ad::hadamard(project(s, spec, h), t.constant(w)));
      },
      s.parameters());
  EXPECT_TRUE(report.passed()) << report.max_rel_error();
}

INSTANTIATE_TEST_SUITE_P(Configurations, EncoderGradients,
                         ::testing::Values(GradCase{BaseEncoder::linear, false, "prelu"},
                                           GradCase{BaseEncoder::linear, true, "elu"},
                                           GradCase{BaseEncoder::gconv, false, "elu"},
                                           GradCase{BaseEncoder::gconv, true, "prelu"},
                                           GradCase{BaseEncoder::linear, false, "rrelu"}));

TEST(Encoder, SinglePrecisionTracksDouble) {
  RngStream rng(12, RngPurpose::init);
  const auto g = st::random_graph(10, 0.3, 4, 2, rng);
  ModelSpec spec;
  spec.base_encoder = BaseEncoder::gconv;
  spec.hidden_dim = 5;
  spec.projector_dim = 3;
  RngStream a(3, RngPurpose::init), b(3, RngPurpose::init);
  const auto sd = init_encoder<double>(spec, 4, a);
  const auto sf = init_encoder<float>(spec, 4, b);
  const auto hd = inference_embeddings(sd, spec, g);
  const auto hf = inference_embeddings(sf, spec, g).cast<double>();
  for (std::size_t i = 0; i < hd.size(); ++i) EXPECT_NEAR(hd[i], hf[i], 1e-5);
}
