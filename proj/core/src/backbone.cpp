// SPDX-License-Identifier: Apache-2.0
#include "prosodet/backbone.hpp"

#include <cmath>

#include "prosodet/errors.hpp"

namespace prosodet {

std::vector<ConvSpec> EncoderConfig::resolved_frontend() const {
  if (!conv_frontend.empty()) return conv_frontend;
  const int mid = std::max(8, d_model / 2);
  return {{20, 10, mid}, {16, 8, mid}, {8, 4, d_model}};
}

void EncoderConfig::validate() const {
  if (n_layers < 1) throw ConfigError("encoder n_layers must be >= 1");
  if (d_model < 8) throw ConfigError("encoder d_model must be >= 8");
  if (n_heads < 1 || d_model % n_heads != 0) {
    throw ConfigError("encoder n_heads must divide d_model");
  }
  if (frame_period_ms != kFramePeriodMs) {
    throw ConfigError("encoder frame period is fixed at 20 ms in this build");
  }
  const auto frontend = resolved_frontend();
  int stride_product = 1;
  for (const auto& conv : frontend) {
    if (conv.kernel < conv.stride || conv.stride < 1 || conv.channels < 1) {
      throw ConfigError("conv frontend layers need kernel >= stride >= 1, channels >= 1");
    }
    stride_product *= conv.stride;
  }
  if (stride_product != kHopSamples) {
    throw ConfigError("conv frontend strides must multiply to one 20 ms hop (" +
                      std::to_string(kHopSamples) + " samples), got " +
                      std::to_string(stride_product));
  }
  if (frontend.back().channels != d_model) {
    throw ConfigError("conv frontend must end at d_model channels");
  }
}

const Mat& last_layer(const LayerStack& stack) {
  if (stack.layers.empty()) throw DataError("last_layer: empty layer stack");
  return stack.layers.back();
}

std::vector<double> layer_weights_from_logits(const Mat& logits) {
  const double m = logits.maxCoeff();
  std::vector<double> w(static_cast<size_t>(logits.size()));
  double sum = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    w[static_cast<size_t>(i)] = std::exp(logits(i) - m);
    sum += w[static_cast<size_t>(i)];
  }
  for (double& x : w) x /= sum;
  return w;
}

Mat aggregate_layers_value(const LayerStack& stack, const Mat& logits) {
  if (static_cast<size_t>(logits.size()) != stack.n_layers()) {
    throw DataError("aggregate_layers: layer count mismatch (" +
                    std::to_string(stack.n_layers()) + " layers, " +
                    std::to_string(logits.size()) + " weights)");
  }
  const auto w = layer_weights_from_logits(logits);
  Mat out = Mat::Zero(stack.frames(), stack.dim());
  for (size_t k = 0; k < stack.n_layers(); ++k) {
    out += w[k] * stack.layers[k];
  }
  return out;
}

void Backbone::init(const EncoderConfig& cfg, rng::Stream& rng) {
  cfg.validate();
  cfg_ = cfg;
  cfg_.conv_frontend = cfg.resolved_frontend();  // store explicitly

  frontend_.clear();
  frontend_.resize(cfg_.conv_frontend.size());
  int in_channels = 1;
  for (size_t i = 0; i < cfg_.conv_frontend.size(); ++i) {
    const ConvSpec& spec = cfg_.conv_frontend[i];
    frontend_[i].init("backbone.conv" + std::to_string(i), in_channels, spec.channels,
                      spec.kernel, spec.stride, rng);
    in_channels = spec.channels;
  }
  frontend_norm_.init("backbone.frontend_norm", cfg.d_model);

  blocks_.clear();
  blocks_.resize(static_cast<size_t>(cfg.n_layers));
  for (int k = 0; k < cfg.n_layers; ++k) {
    const std::string base = "backbone.block" + std::to_string(k);
    Block& blk = blocks_[static_cast<size_t>(k)];
    blk.norm_attn.init(base + ".norm_attn", cfg.d_model);
    blk.wq.init(base + ".wq", cfg.d_model, cfg.d_model, rng);
    blk.wk.init(base + ".wk", cfg.d_model, cfg.d_model, rng);
    blk.wv.init(base + ".wv", cfg.d_model, cfg.d_model, rng);
    blk.wo.init(base + ".wo", cfg.d_model, cfg.d_model, rng);
    blk.norm_mlp.init(base + ".norm_mlp", cfg.d_model);
    blk.mlp_in.init(base + ".mlp_in", cfg.d_model, cfg.mlp_dim(), rng);
    blk.mlp_out.init(base + ".mlp_out", cfg.mlp_dim(), cfg.d_model, rng);
  }

  layer_logits_.name = "backbone.layer_logits";
  layer_logits_.value = Mat::Zero(cfg.n_layers, 1);  // uniform weights at init
  layer_logits_.zero_grad();
}

ad::Var Backbone::attention(ad::Tape& tape, ad::Var x, const Block& block) const {
  // x is already layer-normed; multi-head self-attention
  const int d = cfg_.d_model;
  const int heads = cfg_.n_heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ad::Var q = block.wq.forward(tape, x);
  ad::Var k = block.wk.forward(tape, x);
  ad::Var v = block.wv.forward(tape, x);

  std::vector<ad::Var> head_outputs;
  head_outputs.reserve(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    ad::Var qh = tape.slice_cols(q, h * dh, dh);
    ad::Var kh = tape.slice_cols(k, h * dh, dh);
    ad::Var vh = tape.slice_cols(v, h * dh, dh);
    ad::Var scores = tape.affine(tape.matmul_nt(qh, kh), scale, 0.0);
    ad::Var probs = tape.softmax_rows(scores);
    head_outputs.push_back(tape.matmul(probs, vh));
  }
  ad::Var merged = heads == 1 ? head_outputs[0] : tape.concat_cols(head_outputs);
  return block.wo.forward(tape, merged);
}

std::vector<ad::Var> Backbone::forward(ad::Tape& tape,
                                       const std::vector<double>& waveform) const {
  if (waveform.empty()) throw DataError("encode: empty waveform");
  Mat x0(static_cast<Eigen::Index>(waveform.size()), 1);
  for (size_t i = 0; i < waveform.size(); ++i) x0(static_cast<Eigen::Index>(i), 0) = waveform[i];

  ad::Var x = tape.constant(std::move(x0));
  for (const auto& conv : frontend_) {
    x = tape.gelu(conv.forward(tape, x));
  }
  x = frontend_norm_.forward(tape, x);

  // cheap relative to the blocks; recomputed per call so concurrent
  // inference shares no mutable state
  const int frames = static_cast<int>(tape.value(x).rows());
  x = tape.add(x, tape.constant(nn::sinusoidal_positions(frames, cfg_.d_model)));

  std::vector<ad::Var> layer_outputs;
  layer_outputs.reserve(blocks_.size());
  for (const Block& blk : blocks_) {
    x = tape.add(x, attention(tape, blk.norm_attn.forward(tape, x), blk));
    ad::Var pre = blk.norm_mlp.forward(tape, x);
    ad::Var hidden = tape.gelu(blk.mlp_in.forward(tape, pre));
    x = tape.add(x, blk.mlp_out.forward(tape, hidden));
    layer_outputs.push_back(x);
  }
  return layer_outputs;
}

ad::Var Backbone::aggregate(ad::Tape& tape, const std::vector<ad::Var>& layers) const {
  if (layers.size() != static_cast<size_t>(cfg_.n_layers)) {
    throw DataError("aggregate: layer count mismatch");
  }
  ad::Var logits = layer_logits_.use(tape);
  // softmax over the column vector: treat as one row
  ad::Var weights = tape.softmax_rows(tape.matmul_nt(tape.constant(Mat::Ones(1, 1)), logits));
  ad::Var out;
  for (size_t k = 0; k < layers.size(); ++k) {
    ad::Var wk = tape.element(weights, 0, static_cast<int>(k));
    ad::Var term = tape.mul_scalar_var(layers[k], wk);
    out = (k == 0) ? term : tape.add(out, term);
  }
  return out;
}

LayerStack Backbone::encode_waveform(const std::vector<double>& waveform) const {
  ad::Tape tape;
  const auto layer_vars = forward(tape, waveform);
  LayerStack stack;
  stack.layers.reserve(layer_vars.size());
  for (size_t k = 0; k < layer_vars.size(); ++k) {
    const Mat& layer = tape.value(layer_vars[k]);
    if (!layer.allFinite()) {
      throw NumericalError("encode: non-finite activations in transformer layer " +
                           std::to_string(k));
    }
    stack.layers.push_back(layer);
  }
  return stack;
}

LayerStack Backbone::encode(const Utterance& utt) const { return encode_waveform(utt.waveform); }

void Backbone::visit_params(const nn::ParamVisitor& fn) {
  visit_encoder_params(fn);
  visit_layer_weight_params(fn);
}

void Backbone::visit_layer_weight_params(const nn::ParamVisitor& fn) { fn(layer_logits_); }

void Backbone::visit_encoder_params(const nn::ParamVisitor& fn) {
  for (auto& conv : frontend_) conv.visit(fn);
  frontend_norm_.visit(fn);
  for (Block& blk : blocks_) {
    blk.norm_attn.visit(fn);
    blk.wq.visit(fn);
    blk.wk.visit(fn);
    blk.wv.visit(fn);
    blk.wo.visit(fn);
    blk.norm_mlp.visit(fn);
    blk.mlp_in.visit(fn);
    blk.mlp_out.visit(fn);
  }
}

}  // namespace prosodet
