// SPDX-License-Identifier: Apache-2.0
#include "prosodet/spoof_head.hpp"

#include <cmath>

#include "prosodet/errors.hpp"

namespace prosodet {

void SpoofClassifierConfig::validate() const {
  if (in_dim < 1) throw ConfigError("classifier in_dim must be positive");
  if (pooling != "mean") {
    throw ConfigError("unsupported temporal pooling '" + pooling + "' (this build: mean)");
  }
  if (!(w_bonafide > 0.0) || !(w_spoof > 0.0)) {
    throw ConfigError("class weights must be positive");
  }
  if (alpha < 0.0 || beta < 0.0) throw ConfigError("alpha and beta must be >= 0");
}

void SpoofClassifier::init(const SpoofClassifierConfig& cfg, rng::Stream& rng) {
  cfg.validate();
  cfg_ = cfg;
  out_.init("classifier.out", cfg.in_dim, 2, rng);
}

ad::Var SpoofClassifier::forward(ad::Tape& tape, ad::Var h2) const {
  const Mat& x = tape.value(h2);
  if (x.cols() != cfg_.in_dim) {
    throw DataError("classifier: feature dim " + std::to_string(x.cols()) +
                    " != configured in_dim " + std::to_string(cfg_.in_dim));
  }
  return out_.forward(tape, tape.mean_over_rows(h2));
}

Mat SpoofClassifier::classify(const Mat& h2) const {
  if (!h2.allFinite()) throw NumericalError("classifier input contains non-finite values");
  ad::Tape tape;
  ad::Var logits = forward(tape, tape.constant(h2));
  return tape.value(logits);
}

void SpoofClassifier::set_class_weights(double w_bonafide, double w_spoof) {
  if (!(w_bonafide > 0.0) || !(w_spoof > 0.0)) {
    throw ConfigError("class weights must be positive");
  }
  cfg_.w_bonafide = w_bonafide;
  cfg_.w_spoof = w_spoof;
}

void SpoofClassifier::visit_params(const nn::ParamVisitor& fn) { out_.visit(fn); }

double spoof_score(const Mat& logits) {
  if (logits.rows() != 1 || logits.cols() != 2) {
    throw DataError("spoof_score expects 1x2 logits");
  }
  if (!logits.allFinite()) throw NumericalError("spoof_score: non-finite logits");
  return logits(0, 0) - logits(0, 1);
}

ad::Var weighted_cross_entropy(ad::Tape& tape, ad::Var cls_logits, Label truth,
                               double w_bonafide, double w_spoof) {
  const Mat& l = tape.value(cls_logits);
  if (l.rows() != 1 || l.cols() != 2) {
    throw DataError("weighted_cross_entropy expects 1x2 logits");
  }
  if (truth == Label::Unlabeled) {
    throw DataError("weighted_cross_entropy: utterance label required");
  }
  if (!(w_bonafide > 0.0) || !(w_spoof > 0.0)) {
    throw ConfigError("class weights must be positive");
  }
  const int target_col = truth == Label::Bonafide ? 0 : 1;
  const double w = truth == Label::Bonafide ? w_bonafide : w_spoof;
  ad::Var ce = tape.sub(tape.logsumexp_rows(cls_logits), tape.element(cls_logits, 0, target_col));
  return tape.affine(ce, w, 0.0);
}

ad::Var stage2_loss(ad::Tape& tape, ad::Var cls_logits, Label truth, ad::Var f0_hat,
                    ad::Var vuv_logits, const Mat& ref_f0_norm, const Mat& ref_vuv,
                    double alpha, double beta, double w_bonafide, double w_spoof,
                    const ProsodyLossOptions& opts) {
  if (alpha < 0.0 || beta < 0.0) throw ConfigError("alpha and beta must be >= 0");
  ad::Var cls = weighted_cross_entropy(tape, cls_logits, truth, w_bonafide, w_spoof);
  if (alpha == 0.0) return cls;
  ProsodyLossTerms terms =
      prosody_loss_terms(tape, f0_hat, vuv_logits, ref_f0_norm, ref_vuv, opts);
  ad::Var aux = tape.add(terms.mse, tape.affine(terms.bce, beta, 0.0));
  return tape.add(cls, tape.affine(aux, alpha, 0.0));
}

double stage2_loss_value(const Mat& cls_logits, Label truth, const Mat& f0_hat,
                         const Mat& vuv_logits, const Mat& ref_f0_norm, const Mat& ref_vuv,
                         double alpha, double beta, double w_bonafide, double w_spoof,
                         const ProsodyLossOptions& opts) {
  ad::Tape tape;
  ad::Var loss = stage2_loss(tape, tape.constant(cls_logits), truth, tape.constant(f0_hat),
                             tape.constant(vuv_logits), ref_f0_norm, ref_vuv, alpha, beta,
                             w_bonafide, w_spoof, opts);
  return tape.scalar(loss);
}

}  // namespace prosodet
