// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_SPOOF_HEAD_HPP
#define PROSODET_SPOOF_HEAD_HPP

#include <string>

#include "prosodet/autodiff.hpp"
#include "prosodet/manifest.hpp"
#include "prosodet/nn.hpp"
#include "prosodet/pro_mtl.hpp"

namespace prosodet {

struct SpoofClassifierConfig {
  int in_dim = 64;
  std::string pooling = "mean";  // temporal pooling over frames
  double w_bonafide = 1.0;       // class weights for the cross-entropy term
  double w_spoof = 1.0;
  double alpha = 0.4;            // auxiliary prosody weight
  double beta = 0.2;             // V/UV weight inside the auxiliary term

  void validate() const;
  bool operator==(const SpoofClassifierConfig&) const = default;
};

// Utterance id, spoof score (higher => more bonafide-like) and ground truth.
struct ScoreRecord {
  std::string utt_id;
  double score = 0.0;
  Label label = Label::Unlabeled;
};

// Mean pooling over frames followed by a linear 2-class layer.
// Logit order: column 0 = bonafide, column 1 = spoof.
class SpoofClassifier {
 public:
  SpoofClassifier() = default;
  SpoofClassifier(const SpoofClassifierConfig& cfg, rng::Stream& rng) { init(cfg, rng); }

  void init(const SpoofClassifierConfig& cfg, rng::Stream& rng);

  ad::Var forward(ad::Tape& tape, ad::Var h2) const;  // T x d -> 1 x 2 logits
  Mat classify(const Mat& h2) const;                  // value-space

  const SpoofClassifierConfig& config() const { return cfg_; }
  // Loss hyperparameters are manifest-dependent; the trainer sets them after
  // any checkpoint restore so restores compare architectures, not weights.
  void set_class_weights(double w_bonafide, double w_spoof);
  void visit_params(const nn::ParamVisitor& fn);

 private:
  SpoofClassifierConfig cfg_;
  nn::Linear out_;
};

// bonafide-minus-spoof logit; invariant to common logit shifts
double spoof_score(const Mat& logits);

// Class-weighted cross-entropy for one utterance: w_label * (lse - logit_label).
ad::Var weighted_cross_entropy(ad::Tape& tape, ad::Var cls_logits, Label truth,
                               double w_bonafide, double w_spoof);

// L_total = L_CLS + alpha * (MSE + beta * BCE)
ad::Var stage2_loss(ad::Tape& tape, ad::Var cls_logits, Label truth, ad::Var f0_hat,
                    ad::Var vuv_logits, const Mat& ref_f0_norm, const Mat& ref_vuv,
                    double alpha, double beta, double w_bonafide, double w_spoof,
                    const ProsodyLossOptions& opts = {});

double stage2_loss_value(const Mat& cls_logits, Label truth, const Mat& f0_hat,
                         const Mat& vuv_logits, const Mat& ref_f0_norm, const Mat& ref_vuv,
                         double alpha, double beta, double w_bonafide, double w_spoof,
                         const ProsodyLossOptions& opts = {});

}  // namespace prosodet

#endif  // PROSODET_SPOOF_HEAD_HPP
