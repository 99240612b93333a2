// SPDX-License-Identifier: Apache-2.0
#include "prosodet/model.hpp"

#include "prosodet/errors.hpp"

namespace prosodet {

void ModelConfig::validate() const {
  encoder.validate();
  promtl.validate();
  classifier.validate();
  if (promtl.in_dim != encoder.d_model) {
    throw ConfigError("promtl.in_dim must equal encoder.d_model");
  }
  if (classifier.in_dim != encoder.d_model) {
    throw ConfigError("classifier.in_dim must equal encoder.d_model");
  }
}

ModelConfig ModelConfig::desk_default() {
  ModelConfig cfg;
  cfg.encoder.n_layers = 4;
  cfg.encoder.d_model = 64;
  cfg.encoder.n_heads = 4;
  cfg.promtl.in_dim = 64;
  cfg.classifier.in_dim = 64;
  return cfg;
}

ModelConfig ModelConfig::tiny() {
  ModelConfig cfg;
  cfg.encoder.n_layers = 2;
  cfg.encoder.d_model = 8;
  cfg.encoder.n_heads = 2;
  cfg.promtl.in_dim = 8;
  cfg.promtl.proj_dim = 8;
  cfg.promtl.recurrent_hidden = 8;
  cfg.classifier.in_dim = 8;
  return cfg;
}

void Model::init(const ModelConfig& cfg, uint64_t init_seed) {
  cfg.validate();
  cfg_ = cfg;
  // checkpoints compare configs verbatim, so store the frontend explicitly
  cfg_.encoder.conv_frontend = cfg.encoder.resolved_frontend();
  {
    rng::Stream r(rng::derive(init_seed, "init/backbone"));
    backbone_.init(cfg.encoder, r);
  }
  {
    rng::Stream r(rng::derive(init_seed, "init/promtl"));
    promtl_.init(cfg.promtl, r);
  }
  {
    rng::Stream r(rng::derive(init_seed, "init/classifier"));
    classifier_.init(cfg.classifier, r);
  }
}

void Model::reinit_classifier(uint64_t seed) {
  rng::Stream r(rng::derive(seed, "init/classifier"));
  classifier_.init(cfg_.classifier, r);
}

void Model::reinit_promtl(uint64_t seed) {
  rng::Stream r(rng::derive(seed, "init/promtl"));
  promtl_.init(cfg_.promtl, r);
}

void Model::visit_params(const nn::ParamVisitor& fn) {
  backbone_.visit_params(fn);
  promtl_.visit_params(fn);
  classifier_.visit_params(fn);
}

void Model::zero_grads() {
  visit_params([](nn::Parameter& p) { p.zero_grad(); });
}

Eigen::VectorXd Model::flatten_params() {
  size_t total = 0;
  visit_params([&](nn::Parameter& p) { total += static_cast<size_t>(p.value.size()); });
  Eigen::VectorXd flat(static_cast<Eigen::Index>(total));
  Eigen::Index offset = 0;
  visit_params([&](nn::Parameter& p) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) flat(offset++) = p.value(i);
  });
  return flat;
}

void Model::unflatten_params(const Eigen::VectorXd& flat) {
  Eigen::Index offset = 0;
  visit_params([&](nn::Parameter& p) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value(i) = flat(offset++);
  });
  if (offset != flat.size()) throw NumericalError("unflatten_params: size mismatch");
}

double Model::score_utterance(const Utterance& utt) const {
  LayerStack stack = backbone_.encode(utt);
  Mat h2 = aggregate_layers_value(stack, backbone_.layer_logits());
  Mat logits = classifier_.classify(h2);
  return spoof_score(logits);
}

}  // namespace prosodet
