// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "prosodet/errors.hpp"
#include "prosodet/pro_mtl.hpp"
#include "support/test_util.hpp"

using namespace prosodet;
using test_util::random_mat;

namespace {

ProMTL make_head(int in_dim = 8, int hidden = 8, uint64_t seed = 7) {
  ProMTLConfig cfg;
  cfg.in_dim = in_dim;
  cfg.proj_dim = hidden;
  cfg.recurrent_hidden = hidden;
  rng::Stream rng(seed);
  return ProMTL(cfg, rng);
}

}  // namespace

TEST_CASE("forward shape contract") {
  ProMTL head = make_head(64, 256);
  rng::Stream rng(3);
  const Mat features = random_mat(200, 64, rng);
  const ProsodyPrediction pred = head.predict(features);
  CHECK(pred.f0_hat.rows() == 200);
  CHECK(pred.f0_hat.cols() == 1);
  CHECK(pred.vuv_logits.rows() == 200);
  CHECK(pred.vuv_logits.cols() == 1);
}

TEST_CASE("single-frame input stays finite") {
  ProMTL head = make_head();
  rng::Stream rng(5);
  const ProsodyPrediction pred = head.predict(random_mat(1, 8, rng));
  REQUIRE(pred.f0_hat.rows() == 1);
  CHECK(std::isfinite(pred.f0_hat(0, 0)));
  CHECK(std::isfinite(pred.vuv_logits(0, 0)));
}

TEST_CASE("dimension mismatch is rejected") {
  ProMTL head = make_head(8, 8);
  rng::Stream rng(7);
  const Mat wrong = random_mat(10, 5, rng);
  CHECK_THROWS_AS(head.predict(wrong), DataError);
}

TEST_CASE("causal prefix property: truncated input reproduces the prefix") {
  ProMTL head = make_head(8, 8);
  rng::Stream rng(11);
  const Mat features = random_mat(24, 8, rng);
  const ProsodyPrediction full = head.predict(features);
  for (int t : {1, 5, 12, 23}) {
    const ProsodyPrediction prefix = head.predict(features.topRows(t + 1));
    for (int i = 0; i <= t; ++i) {
      REQUIRE(std::fabs(prefix.f0_hat(i, 0) - full.f0_hat(i, 0)) < 1e-6);
      REQUIRE(std::fabs(prefix.vuv_logits(i, 0) - full.vuv_logits(i, 0)) < 1e-6);
    }
  }
}

TEST_CASE("stage-1 loss: exact regression with lambda 0 gives zero") {
  rng::Stream rng(13);
  const Mat ref = random_mat(20, 1, rng);
  const Mat logits = random_mat(20, 1, rng);
  Mat vuv(20, 1);
  for (int i = 0; i < 20; ++i) vuv(i, 0) = rng.uniform() < 0.5 ? 0.0 : 1.0;
  CHECK(stage1_loss_value(ref, logits, ref, vuv, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("stage-1 loss: MSE 0.5 and BCE 1.0 at lambda 0.3 combine to 0.8") {
  const int n = 4;
  Mat f0_hat = Mat::Zero(n, 1);
  Mat ref_f0(n, 1);
  // per-frame squared error 0.5 -> MSE component exactly 0.5
  for (int i = 0; i < n; ++i) ref_f0(i, 0) = std::sqrt(0.5);
  // logit -ln(e-1) with target 1 gives per-frame BCE ln(1 + e^{ln(e-1)}) = 1
  Mat vuv_logits = Mat::Constant(n, 1, -std::log(std::exp(1.0) - 1.0));
  Mat ref_vuv = Mat::Ones(n, 1);
  const double loss = stage1_loss_value(f0_hat, vuv_logits, ref_f0, ref_vuv, 0.3);
  CHECK(loss == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("stage-1 loss equals the scalar-loop oracle on random data") {
  rng::Stream rng(17);
  for (int iter = 0; iter < 30; ++iter) {
    const int n = 50;
    std::vector<double> f0_hat(n), vuv_logits(n), ref_f0(n), ref_vuv(n);
    for (int i = 0; i < n; ++i) {
      f0_hat[static_cast<size_t>(i)] = rng.uniform(-2.0, 2.0);
      vuv_logits[static_cast<size_t>(i)] = rng.uniform(-4.0, 4.0);
      ref_f0[static_cast<size_t>(i)] = rng.uniform(-2.0, 2.0);
      ref_vuv[static_cast<size_t>(i)] = rng.uniform() < 0.6 ? 1.0 : 0.0;
    }
    const double lambda = rng.uniform(0.0, 1.0);
    const double lib = stage1_loss_value(column_from(f0_hat), column_from(vuv_logits),
                                         column_from(ref_f0), column_from(ref_vuv), lambda);
    const double oracle =
        test_util::oracle_stage1_loss(f0_hat, vuv_logits, ref_f0, ref_vuv, lambda);
    REQUIRE(std::fabs(lib - oracle) <= 1e-9);
  }
}

TEST_CASE("loss is non-negative and zero only at exact fit with zero vuv term") {
  rng::Stream rng(19);
  const Mat ref = random_mat(10, 1, rng);
  Mat vuv = Mat::Ones(10, 1);
  // strongly saturated correct logits push BCE toward 0 but not exactly 0
  Mat logits = Mat::Constant(10, 1, 60.0);
  const double loss = stage1_loss_value(ref, logits, ref, vuv, 0.3);
  CHECK(loss >= 0.0);
  CHECK(loss < 1e-9);

  const Mat off = ref.array() + 0.5;
  CHECK(stage1_loss_value(off, logits, ref, vuv, 0.3) > 0.0);
}

TEST_CASE("BCE from logits stays finite across [-100, 100]") {
  Mat logits(5, 1);
  logits << -100.0, -37.0, 0.0, 37.0, 100.0;
  Mat ref = Mat::Ones(5, 1);
  Mat f0 = Mat::Zero(5, 1);
  const double loss = stage1_loss_value(f0, logits, f0, ref, 0.3);
  CHECK(std::isfinite(loss));
}

TEST_CASE("length mismatch is rejected") {
  rng::Stream rng(23);
  const Mat a = random_mat(10, 1, rng);
  const Mat b = random_mat(9, 1, rng);
  CHECK_THROWS_AS(stage1_loss_value(a, a, b, b, 0.3), DataError);
}

TEST_CASE("negative lambda is rejected") {
  rng::Stream rng(29);
  const Mat a = random_mat(5, 1, rng);
  CHECK_THROWS_AS(stage1_loss_value(a, a, a, Mat::Ones(5, 1), -0.1), ConfigError);
}

TEST_CASE("masked-MSE ablation averages over voiced frames only") {
  Mat f0_hat(4, 1), ref_f0(4, 1), vuv(4, 1), logits = Mat::Zero(4, 1);
  f0_hat << 1.0, 0.0, 2.0, 0.0;
  ref_f0 << 0.0, 0.0, 0.0, 0.0;
  vuv << 1.0, 0.0, 1.0, 0.0;
  ProsodyLossOptions opts;
  opts.mask_unvoiced_mse = true;
  const double loss = stage1_loss_value(f0_hat, logits, ref_f0, vuv, 0.0, opts);
  CHECK(loss == doctest::Approx((1.0 + 4.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("gradient check: stage-1 loss through the whole head") {
  ProMTL head = make_head(8, 8, 31);
  rng::Stream rng(37);
  const Mat features = random_mat(10, 8, rng);
  const Mat ref_f0 = random_mat(10, 1, rng);
  Mat ref_vuv(10, 1);
  for (int i = 0; i < 10; ++i) ref_vuv(i, 0) = rng.uniform() < 0.5 ? 0.0 : 1.0;

  std::vector<nn::Parameter*> params;
  head.visit_params([&](nn::Parameter& p) { params.push_back(&p); });

  auto loss = [&](bool with_grad) {
    for (auto* p : params) p->zero_grad();
    ad::Tape tape;
    ad::Var x = tape.constant(features);
    ProMTL::Out out = head.forward(tape, x);
    ad::Var l = stage1_loss(tape, out.f0_hat, out.vuv_logits, ref_f0, ref_vuv, 0.3);
    if (with_grad) tape.backward(l);
    return tape.scalar(l);
  };

  loss(true);
  std::vector<Mat> analytic;
  for (auto* p : params) analytic.push_back(p->grad);  // snapshot before FD reruns
  for (size_t i = 0; i < params.size(); ++i) {
    const double err = test_util::max_grad_rel_err(params[i]->value, analytic[i],
                                                   [&]() { return loss(false); });
    INFO("parameter ", params[i]->name);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("monotone sanity: one small gradient step decreases the loss") {
  int decreased = 0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    ProMTL head = make_head(8, 8, seed);
    rng::Stream rng(seed + 1000);
    const Mat features = random_mat(12, 8, rng);
    const Mat ref_f0 = random_mat(12, 1, rng);
    Mat ref_vuv(12, 1);
    for (int i = 0; i < 12; ++i) ref_vuv(i, 0) = rng.uniform() < 0.5 ? 0.0 : 1.0;

    std::vector<nn::Parameter*> params;
    head.visit_params([&](nn::Parameter& p) { params.push_back(&p); });

    auto loss = [&](bool with_grad) {
      for (auto* p : params) p->zero_grad();
      ad::Tape tape;
      ProMTL::Out out = head.forward(tape, tape.constant(features));
      ad::Var l = stage1_loss(tape, out.f0_hat, out.vuv_logits, ref_f0, ref_vuv, 0.3);
      if (with_grad) tape.backward(l);
      return tape.scalar(l);
    };

    const double before = loss(true);
    for (auto* p : params) p->value -= 1e-3 * p->grad;
    const double after = loss(false);
    if (after < before) ++decreased;
  }
  CHECK(decreased >= 18);
}
