// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_BACKBONE_HPP
#define PROSODET_BACKBONE_HPP

#include <string>
#include <vector>

#include "prosodet/autodiff.hpp"
#include "prosodet/nn.hpp"
#include "prosodet/utterance.hpp"

namespace prosodet {

using ad::Mat;

// One strided conv layer of the waveform downsampler.
struct ConvSpec {
  int kernel = 1;
  int stride = 1;
  int channels = 1;
  bool operator==(const ConvSpec&) const = default;
};

// Desk-scale defaults; the full-scale geometry (24 x 1024) is expressible
// through the same fields.
struct EncoderConfig {
  int n_layers = 4;
  int d_model = 64;
  int n_heads = 4;
  int mlp_hidden = 0;  // 0 => 4 * d_model
  // waveform-to-frame downsampler; strides must multiply to one 20 ms hop.
  // Empty selects the default stack scaled to d_model.
  std::vector<ConvSpec> conv_frontend;
  int frame_period_ms = kFramePeriodMs;

  int mlp_dim() const { return mlp_hidden > 0 ? mlp_hidden : 4 * d_model; }
  std::vector<ConvSpec> resolved_frontend() const;
  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

// Per-layer frame embeddings for one utterance; layers[k] is T_pred x d.
struct LayerStack {
  std::vector<Mat> layers;

  size_t n_layers() const { return layers.size(); }
  Eigen::Index frames() const { return layers.empty() ? 0 : layers[0].rows(); }
  Eigen::Index dim() const { return layers.empty() ? 0 : layers[0].cols(); }
};

// layers[n_layers - 1], the final transformer output
const Mat& last_layer(const LayerStack& stack);

// softmax(logits)-weighted sum over layers, value-space version
Mat aggregate_layers_value(const LayerStack& stack, const Mat& logits);

// softmax weights over layer logits; sums to 1
std::vector<double> layer_weights_from_logits(const Mat& logits);

// Minimal interface an external pretrained encoder adapter must satisfy to
// feed the scoring path.
class FrameEncoder {
 public:
  virtual ~FrameEncoder() = default;
  virtual LayerStack encode(const Utterance& utt) const = 0;
};

// Trainable stand-in encoder: strided conv frontend (total stride = one
// 20 ms hop) -> sinusoidal positions -> pre-norm transformer blocks.
class Backbone : public FrameEncoder {
 public:
  Backbone() = default;
  Backbone(const EncoderConfig& cfg, rng::Stream& rng) { init(cfg, rng); }

  void init(const EncoderConfig& cfg, rng::Stream& rng);

  // Tape-building forward; returns one Var per transformer layer.
  std::vector<ad::Var> forward(ad::Tape& tape, const std::vector<double>& waveform) const;

  // Weighted layer aggregation using this model's layer logits (trainable).
  ad::Var aggregate(ad::Tape& tape, const std::vector<ad::Var>& layers) const;

  // Value-space encode with finiteness diagnostics per layer.
  LayerStack encode(const Utterance& utt) const override;
  LayerStack encode_waveform(const std::vector<double>& waveform) const;

  const EncoderConfig& config() const { return cfg_; }
  Mat layer_logits() const { return layer_logits_.value; }

  // visits every parameter including the layer logits
  void visit_params(const nn::ParamVisitor& fn);
  // layer-aggregation logits only (their own optimizer group in stage 2)
  void visit_layer_weight_params(const nn::ParamVisitor& fn);
  // everything except the layer logits
  void visit_encoder_params(const nn::ParamVisitor& fn);

 private:
  struct Block {
    nn::LayerNorm norm_attn;
    nn::Linear wq, wk, wv, wo;
    nn::LayerNorm norm_mlp;
    nn::Linear mlp_in, mlp_out;
  };

  ad::Var attention(ad::Tape& tape, ad::Var x, const Block& block) const;

  EncoderConfig cfg_;
  std::vector<nn::Conv1d> frontend_;
  nn::LayerNorm frontend_norm_;
  std::vector<Block> blocks_;
  nn::Parameter layer_logits_;  // n_layers x 1
};

}  // namespace prosodet

#endif  // PROSODET_BACKBONE_HPP
