// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_PRO_MTL_HPP
#define PROSODET_PRO_MTL_HPP

#include <vector>

#include "prosodet/autodiff.hpp"
#include "prosodet/nn.hpp"

namespace prosodet {

using ad::Mat;

struct ProMTLConfig {
  int in_dim = 64;          // encoder d_model
  int proj_dim = 256;
  int recurrent_hidden = 256;
  double lambda_vuv = 0.3;

  void validate() const;
  bool operator==(const ProMTLConfig&) const = default;
};

// Value-space prediction pair; both sequences are T x 1.
struct ProsodyPrediction {
  Mat f0_hat;       // normalized-F0 scale
  Mat vuv_logits;   // pre-sigmoid
};

// Prosody head: linear projection -> single-layer unidirectional GRU ->
// parallel F0-regression and V/UV-classification heads.
class ProMTL {
 public:
  ProMTL() = default;
  ProMTL(const ProMTLConfig& cfg, rng::Stream& rng) { init(cfg, rng); }

  void init(const ProMTLConfig& cfg, rng::Stream& rng);

  struct Out {
    ad::Var f0_hat;      // T x 1
    ad::Var vuv_logits;  // T x 1
  };
  Out forward(ad::Tape& tape, ad::Var features) const;

  // Convenience value-space forward for scoring/tests.
  ProsodyPrediction predict(const Mat& features) const;

  const ProMTLConfig& config() const { return cfg_; }
  void visit_params(const nn::ParamVisitor& fn);

 private:
  ProMTLConfig cfg_;
  nn::Linear proj_;
  nn::GRU gru_;
  nn::Linear f0_head_;
  nn::Linear vuv_head_;
};

struct ProsodyLossOptions {
  // When set, the F0 MSE averages over voiced frames only (ablation flag);
  // default follows the literal full-sequence reading.
  bool mask_unvoiced_mse = false;
};

struct ProsodyLossTerms {
  ad::Var mse;
  ad::Var bce;
};

// Frame-mean MSE on the normalized contour and frame-mean BCE on the voicing
// logits. All sequences must already share a common length.
ProsodyLossTerms prosody_loss_terms(ad::Tape& tape, ad::Var f0_hat, ad::Var vuv_logits,
                                    const Mat& ref_f0_norm, const Mat& ref_vuv,
                                    const ProsodyLossOptions& opts = {});

// MSE + lambda * BCE
ad::Var stage1_loss(ad::Tape& tape, ad::Var f0_hat, ad::Var vuv_logits,
                    const Mat& ref_f0_norm, const Mat& ref_vuv, double lambda_vuv,
                    const ProsodyLossOptions& opts = {});

// Value-space wrapper over the tape implementation.
double stage1_loss_value(const Mat& f0_hat, const Mat& vuv_logits, const Mat& ref_f0_norm,
                         const Mat& ref_vuv, double lambda_vuv,
                         const ProsodyLossOptions& opts = {});

Mat column_from(const std::vector<double>& v);
Mat column_from(const std::vector<uint8_t>& v);

}  // namespace prosodet

#endif  // PROSODET_PRO_MTL_HPP
