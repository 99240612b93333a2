// SPDX-License-Identifier: Apache-2.0
#include "prosodet/pro_mtl.hpp"

#include "prosodet/errors.hpp"

namespace prosodet {

void ProMTLConfig::validate() const {
  if (in_dim < 1 || proj_dim < 1 || recurrent_hidden < 1) {
    throw ConfigError("pro-mtl dimensions must be positive");
  }
  if (lambda_vuv < 0.0) throw ConfigError("lambda_vuv must be >= 0");
}

void ProMTL::init(const ProMTLConfig& cfg, rng::Stream& rng) {
  cfg.validate();
  cfg_ = cfg;
  proj_.init("promtl.proj", cfg.in_dim, cfg.proj_dim, rng);
  gru_.init("promtl.gru", cfg.proj_dim, cfg.recurrent_hidden, rng);
  f0_head_.init("promtl.f0_head", cfg.recurrent_hidden, 1, rng);
  vuv_head_.init("promtl.vuv_head", cfg.recurrent_hidden, 1, rng);
}

ProMTL::Out ProMTL::forward(ad::Tape& tape, ad::Var features) const {
  const Mat& x = tape.value(features);
  if (x.cols() != cfg_.in_dim) {
    throw DataError("pro-mtl forward: feature dim " + std::to_string(x.cols()) +
                    " != configured in_dim " + std::to_string(cfg_.in_dim));
  }
  if (x.rows() < 1) throw DataError("pro-mtl forward: empty feature sequence");

  ad::Var projected = proj_.forward(tape, features);
  ad::Var recurrent = gru_.forward(tape, projected);
  Out out;
  out.f0_hat = f0_head_.forward(tape, recurrent);
  out.vuv_logits = vuv_head_.forward(tape, recurrent);
  return out;
}

ProsodyPrediction ProMTL::predict(const Mat& features) const {
  ad::Tape tape;
  ad::Var x = tape.constant(features);
  Out out = forward(tape, x);
  ProsodyPrediction pred;
  pred.f0_hat = tape.value(out.f0_hat);
  pred.vuv_logits = tape.value(out.vuv_logits);
  if (!pred.f0_hat.allFinite() || !pred.vuv_logits.allFinite()) {
    throw NumericalError("pro-mtl forward produced non-finite values");
  }
  return pred;
}

void ProMTL::visit_params(const nn::ParamVisitor& fn) {
  proj_.visit(fn);
  gru_.visit(fn);
  f0_head_.visit(fn);
  vuv_head_.visit(fn);
}

ProsodyLossTerms prosody_loss_terms(ad::Tape& tape, ad::Var f0_hat, ad::Var vuv_logits,
                                    const Mat& ref_f0_norm, const Mat& ref_vuv,
                                    const ProsodyLossOptions& opts) {
  const Eigen::Index n = tape.value(f0_hat).rows();
  if (tape.value(vuv_logits).rows() != n || ref_f0_norm.rows() != n || ref_vuv.rows() != n) {
    throw DataError("prosody loss: sequence lengths differ; adjust lengths first");
  }

  ad::Var diff = tape.sub(f0_hat, tape.constant(ref_f0_norm));
  ad::Var sq = tape.cmul(diff, diff);
  ProsodyLossTerms terms;
  if (opts.mask_unvoiced_mse) {
    const double voiced = ref_vuv.sum();
    if (voiced > 0.0) {
      ad::Var masked = tape.cmul(sq, tape.constant(ref_vuv));
      terms.mse = tape.affine(tape.sum_all(masked), 1.0 / voiced, 0.0);
    } else {
      terms.mse = tape.constant(Mat::Zero(1, 1));
    }
  } else {
    terms.mse = tape.mean_all(sq);
  }
  terms.bce = tape.mean_all(tape.bce_with_logits(vuv_logits, ref_vuv));
  return terms;
}

ad::Var stage1_loss(ad::Tape& tape, ad::Var f0_hat, ad::Var vuv_logits,
                    const Mat& ref_f0_norm, const Mat& ref_vuv, double lambda_vuv,
                    const ProsodyLossOptions& opts) {
  if (lambda_vuv < 0.0) throw ConfigError("lambda_vuv must be >= 0");
  ProsodyLossTerms terms =
      prosody_loss_terms(tape, f0_hat, vuv_logits, ref_f0_norm, ref_vuv, opts);
  return tape.add(terms.mse, tape.affine(terms.bce, lambda_vuv, 0.0));
}

double stage1_loss_value(const Mat& f0_hat, const Mat& vuv_logits, const Mat& ref_f0_norm,
                         const Mat& ref_vuv, double lambda_vuv,
                         const ProsodyLossOptions& opts) {
  ad::Tape tape;
  ad::Var loss = stage1_loss(tape, tape.constant(f0_hat), tape.constant(vuv_logits),
                             ref_f0_norm, ref_vuv, lambda_vuv, opts);
  return tape.scalar(loss);
}

Mat column_from(const std::vector<double>& v) {
  Mat m(static_cast<Eigen::Index>(v.size()), 1);
  for (size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

Mat column_from(const std::vector<uint8_t>& v) {
  Mat m(static_cast<Eigen::Index>(v.size()), 1);
  for (size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i] ? 1.0 : 0.0;
  return m;
}

}  // namespace prosodet
