// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "prosodet/backbone.hpp"
#include "prosodet/errors.hpp"
#include "support/test_util.hpp"

using namespace prosodet;
using test_util::random_mat;

namespace {

Backbone make_backbone(const EncoderConfig& cfg, uint64_t seed = 99) {
  rng::Stream rng(seed);
  return Backbone(cfg, rng);
}

std::vector<double> test_waveform(size_t n, uint64_t seed = 3) {
  rng::Stream rng(seed);
  std::vector<double> x(n);
  for (size_t i = 0; i < n; ++i) {
    x[i] = 0.4 * std::sin(2.0 * M_PI * 180.0 * static_cast<double>(i) / kSampleRate) +
           0.05 * rng.gaussian();
  }
  return x;
}

}  // namespace

TEST_CASE("encode yields one 200 x 64 matrix per layer for a 4 s input") {
  const Backbone backbone = make_backbone(EncoderConfig{});
  const LayerStack stack = backbone.encode_waveform(test_waveform(kFixedSamples));
  REQUIRE(stack.n_layers() == 4);
  for (const auto& layer : stack.layers) {
    CHECK(layer.rows() == 200);
    CHECK(layer.cols() == 64);
    CHECK(layer.allFinite());
  }
}

TEST_CASE("frame-rate contract holds for other input lengths") {
  const Backbone backbone = make_backbone(EncoderConfig{});
  // 2.0 s -> 100 frames; 1.0 s -> 50 frames
  CHECK(backbone.encode_waveform(test_waveform(32000)).frames() == 100);
  CHECK(backbone.encode_waveform(test_waveform(16000)).frames() == 50);
}

TEST_CASE("encode is deterministic in eval mode") {
  const Backbone backbone = make_backbone(EncoderConfig{});
  const auto wave = test_waveform(kFixedSamples);
  const LayerStack a = backbone.encode_waveform(wave);
  const LayerStack b = backbone.encode_waveform(wave);
  for (size_t k = 0; k < a.n_layers(); ++k) {
    REQUIRE((a.layers[k].array() == b.layers[k].array()).all());  // bit-identical
  }
}

TEST_CASE("zero waveform produces finite activations") {
  const Backbone backbone = make_backbone(EncoderConfig{});
  const LayerStack stack = backbone.encode_waveform(std::vector<double>(kFixedSamples, 0.0));
  for (const auto& layer : stack.layers) CHECK(layer.allFinite());
}

TEST_CASE("last_layer selects layers[n-1]") {
  LayerStack stack;
  rng::Stream rng(7);
  for (int k = 0; k < 4; ++k) stack.layers.push_back(random_mat(5, 3, rng));
  CHECK((last_layer(stack).array() == stack.layers[3].array()).all());

  LayerStack single;
  single.layers.push_back(random_mat(5, 3, rng));
  CHECK((last_layer(single).array() == single.layers[0].array()).all());

  stack.layers[3](2, 1) = 42.0;
  CHECK(last_layer(stack)(2, 1) == 42.0);

  CHECK_THROWS_AS(last_layer(LayerStack{}), DataError);
}

TEST_CASE("aggregate saturates to a single layer under one-hot logits") {
  rng::Stream rng(11);
  LayerStack stack;
  for (int k = 0; k < 3; ++k) stack.layers.push_back(random_mat(5, 4, rng));
  Mat logits(3, 1);
  logits << -20.0, 20.0, -20.0;
  const Mat out = aggregate_layers_value(stack, logits);
  CHECK((out - stack.layers[1]).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("aggregate of identical layers is that layer for any logits") {
  rng::Stream rng(13);
  const Mat m = random_mat(6, 4, rng);
  LayerStack stack;
  for (int k = 0; k < 4; ++k) stack.layers.push_back(m);
  const Mat logits = random_mat(4, 1, rng, -2.0, 2.0);
  CHECK((aggregate_layers_value(stack, logits) - m).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("aggregate matches the brute-force double-loop oracle") {
  rng::Stream rng(17);
  LayerStack stack;
  for (int k = 0; k < 3; ++k) stack.layers.push_back(random_mat(5, 4, rng));
  const Mat logits = random_mat(3, 1, rng, -1.5, 1.5);
  const Mat out = aggregate_layers_value(stack, logits);

  // oracle: explicit softmax + triple loop
  double denom = 0.0;
  for (int k = 0; k < 3; ++k) denom += std::exp(logits(k, 0));
  for (int t = 0; t < 5; ++t) {
    for (int d = 0; d < 4; ++d) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) {
        acc += std::exp(logits(k, 0)) / denom * stack.layers[static_cast<size_t>(k)](t, d);
      }
      REQUIRE(std::fabs(out(t, d) - acc) < 1e-9);
    }
  }
}

TEST_CASE("softmax layer weights sum to one and are permutation-equivariant") {
  rng::Stream rng(19);
  Mat logits = random_mat(5, 1, rng, -2.0, 2.0);
  auto weights = layer_weights_from_logits(logits);
  double sum = 0.0;
  for (double w : weights) {
    CHECK(w >= 0.0);
    sum += w;
  }
  CHECK(std::fabs(sum - 1.0) < 1e-6);

  Mat permuted(5, 1);
  const int perm[5] = {3, 0, 4, 1, 2};
  for (int i = 0; i < 5; ++i) permuted(i, 0) = logits(perm[i], 0);
  auto permuted_weights = layer_weights_from_logits(permuted);
  for (int i = 0; i < 5; ++i) {
    CHECK(permuted_weights[static_cast<size_t>(i)] ==
          doctest::Approx(weights[static_cast<size_t>(perm[i])]).epsilon(1e-12));
  }
}

TEST_CASE("aggregate gradient w.r.t. logits matches finite differences") {
  // tape-level check through the trainable aggregation path
  EncoderConfig cfg;
  cfg.n_layers = 3;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  Backbone backbone = make_backbone(cfg, 101);

  rng::Stream rng(23);
  std::vector<Mat> layer_values;
  for (int k = 0; k < 3; ++k) layer_values.push_back(random_mat(6, 8, rng));
  const Mat probe = random_mat(6, 8, rng);

  Mat* logits_value = nullptr;
  Mat* logits_grad = nullptr;
  backbone.visit_layer_weight_params([&](nn::Parameter& p) {
    logits_value = &p.value;
    logits_grad = &p.grad;
  });
  REQUIRE(logits_value != nullptr);
  rng::Stream lr(29);
  *logits_value = random_mat(3, 1, lr, -1.0, 1.0);

  auto loss = [&](bool with_grad) {
    backbone.visit_layer_weight_params([](nn::Parameter& p) { p.zero_grad(); });
    ad::Tape tape;
    std::vector<ad::Var> layers;
    for (const auto& lv : layer_values) layers.push_back(tape.constant(lv));
    ad::Var h2 = backbone.aggregate(tape, layers);
    ad::Var s = tape.sum_all(tape.cmul(h2, tape.constant(probe)));
    if (with_grad) tape.backward(s);
    return tape.scalar(s);
  };

  loss(true);
  const Mat analytic = *logits_grad;
  const double err = test_util::max_grad_rel_err(*logits_value, analytic,
                                                 [&]() { return loss(false); });
  CHECK(err < 1e-4);
}

TEST_CASE("aggregate rejects layer-count mismatch") {
  EncoderConfig cfg;
  cfg.n_layers = 3;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  const Backbone backbone = make_backbone(cfg);

  LayerStack stack;
  rng::Stream rng(31);
  stack.layers.push_back(random_mat(4, 8, rng));
  stack.layers.push_back(random_mat(4, 8, rng));
  CHECK_THROWS_AS(aggregate_layers_value(stack, backbone.layer_logits()), DataError);
}

namespace {

// minimal external-encoder adapter: any waveform -> fixed synthetic stack
class FakeEncoder : public FrameEncoder {
 public:
  LayerStack encode(const Utterance& utt) const override {
    const Eigen::Index frames =
        static_cast<Eigen::Index>(utt.waveform.size() / kHopSamples);
    LayerStack stack;
    for (int k = 0; k < 2; ++k) {
      stack.layers.push_back(Mat::Constant(frames, 4, static_cast<double>(k + 1)));
    }
    return stack;
  }
};

}  // namespace

TEST_CASE("external encoder adapters satisfy the frame-encoder interface") {
  FakeEncoder enc;
  Utterance utt;
  utt.utt_id = "fake";
  utt.waveform.assign(kFixedSamples, 0.0);
  const FrameEncoder& iface = enc;
  const LayerStack stack = iface.encode(utt);
  REQUIRE(stack.n_layers() == 2);
  CHECK(stack.frames() == 200);
  CHECK(last_layer(stack)(0, 0) == 2.0);
  // value-space aggregation works on adapter-produced stacks
  Mat logits = Mat::Zero(2, 1);
  const Mat h2 = aggregate_layers_value(stack, logits);
  CHECK(h2(0, 0) == doctest::Approx(1.5));
}

TEST_CASE("config validation") {
  EncoderConfig bad;
  bad.n_layers = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = EncoderConfig{};
  bad.n_heads = 3;  // does not divide 64
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
