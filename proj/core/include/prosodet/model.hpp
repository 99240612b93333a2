// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_MODEL_HPP
#define PROSODET_MODEL_HPP

#include "prosodet/backbone.hpp"
#include "prosodet/pro_mtl.hpp"
#include "prosodet/spoof_head.hpp"

namespace prosodet {

struct ModelConfig {
  EncoderConfig encoder;
  ProMTLConfig promtl;
  SpoofClassifierConfig classifier;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;

  static ModelConfig desk_default();
  // 2-layer / 8-dim geometry used by gradient checks
  static ModelConfig tiny();
};

// Full trainable model. The prosody head reads H1 (last layer) in stage 1
// and the aggregated H2 in stage 2; inference uses only H2 -> classifier.
class Model {
 public:
  Model() = default;
  Model(const ModelConfig& cfg, uint64_t init_seed) { init(cfg, init_seed); }

  void init(const ModelConfig& cfg, uint64_t init_seed);
  void reinit_classifier(uint64_t seed);
  void reinit_promtl(uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  Backbone& backbone() { return backbone_; }
  const Backbone& backbone() const { return backbone_; }
  ProMTL& promtl() { return promtl_; }
  const ProMTL& promtl() const { return promtl_; }
  SpoofClassifier& classifier() { return classifier_; }
  const SpoofClassifier& classifier() const { return classifier_; }

  void visit_params(const nn::ParamVisitor& fn);
  void zero_grads();

  // Flat parameter vector helpers for finite-difference checks.
  Eigen::VectorXd flatten_params();
  void unflatten_params(const Eigen::VectorXd& flat);

  // encode + aggregate + classify -> bonafide-minus-spoof score; the
  // prosody head is not on this path.
  double score_utterance(const Utterance& utt) const;

 private:
  ModelConfig cfg_;
  Backbone backbone_;
  ProMTL promtl_;
  SpoofClassifier classifier_;
};

}  // namespace prosodet

#endif  // PROSODET_MODEL_HPP
