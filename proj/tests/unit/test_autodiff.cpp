// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "prosodet/autodiff.hpp"
#include "support/test_util.hpp"

using namespace prosodet;
using ad::Mat;
using ad::Tape;
using ad::Var;
using test_util::max_grad_rel_err;
using test_util::random_mat;

namespace {

// Checks d(sum of weighted output)/d(input) for a unary graph builder.
void check_unary(const std::function<Var(Tape&, Var)>& build, Eigen::Index rows,
                 Eigen::Index cols, uint64_t seed, double tol = 1e-6) {
  rng::Stream rng(seed);
  Mat x = random_mat(rows, cols, rng);
  Mat weights;  // fixed projection to a scalar

  auto loss_value = [&](Mat* grad_out) {
    Tape tape;
    Mat grad = Mat::Zero(rows, cols);
    Var vx = tape.leaf(x, &grad);
    Var y = build(tape, vx);
    if (weights.size() == 0) {
      weights = random_mat(tape.value(y).rows(), tape.value(y).cols(), rng);
    }
    Var scalar = tape.sum_all(tape.cmul(y, tape.constant(weights)));
    if (grad_out != nullptr) {
      tape.backward(scalar);
      *grad_out = grad;
    }
    return tape.scalar(scalar);
  };

  Mat analytic;
  loss_value(&analytic);
  const double err = max_grad_rel_err(
      x, analytic, [&]() { return loss_value(nullptr); });
  CHECK(err < tol);
}

}  // namespace

TEST_CASE("elementwise op gradients match finite differences") {
  check_unary([](Tape& t, Var x) { return t.sigmoid(x); }, 4, 3, 11);
  check_unary([](Tape& t, Var x) { return t.tanh(x); }, 4, 3, 12);
  check_unary([](Tape& t, Var x) { return t.gelu(x); }, 4, 3, 13);
  check_unary([](Tape& t, Var x) { return t.affine(x, -2.5, 0.75); }, 4, 3, 14);
  check_unary([](Tape& t, Var x) { return t.softmax_rows(x); }, 5, 4, 15);
  check_unary([](Tape& t, Var x) { return t.logsumexp_rows(x); }, 5, 4, 16);
  check_unary([](Tape& t, Var x) { return t.mean_all(x); }, 4, 6, 17);
  check_unary([](Tape& t, Var x) { return t.sum_all(x); }, 4, 6, 18);
  check_unary([](Tape& t, Var x) { return t.mean_over_rows(x); }, 6, 3, 19);
}

TEST_CASE("structural op gradients match finite differences") {
  check_unary([](Tape& t, Var x) { return t.slice_rows(x, 1, 3); }, 6, 3, 21);
  check_unary([](Tape& t, Var x) { return t.slice_cols(x, 1, 2); }, 4, 5, 22);
  check_unary([](Tape& t, Var x) { return t.row(x, 2); }, 5, 4, 23);
  check_unary([](Tape& t, Var x) { return t.element(x, 2, 1); }, 4, 3, 24);
  check_unary([](Tape& t, Var x) { return t.im2col(x, 3, 2, 1, 0); }, 9, 2, 25);
  check_unary(
      [](Tape& t, Var x) {
        return t.concat_cols({t.slice_cols(x, 0, 2), t.slice_cols(x, 2, 2)});
      },
      4, 4, 26);
  check_unary(
      [](Tape& t, Var x) {
        std::vector<Var> rows;
        for (int r = 0; r < 4; ++r) rows.push_back(t.row(x, r));
        return t.stack_rows(rows);
      },
      4, 3, 27);
}

TEST_CASE("binary op gradients match finite differences on both inputs") {
  rng::Stream rng(31);
  Mat a0 = random_mat(4, 3, rng);
  Mat b0 = random_mat(3, 5, rng);
  const Mat w = random_mat(4, 5, rng);

  auto value = [&](Mat* ga, Mat* gb) {
    Tape tape;
    Mat grad_a = Mat::Zero(a0.rows(), a0.cols());
    Mat grad_b = Mat::Zero(b0.rows(), b0.cols());
    Var va = tape.leaf(a0, &grad_a);
    Var vb = tape.leaf(b0, &grad_b);
    Var y = tape.matmul(va, vb);
    Var s = tape.sum_all(tape.cmul(y, tape.constant(w)));
    if (ga != nullptr) {
      tape.backward(s);
      *ga = grad_a;
      *gb = grad_b;
    }
    return tape.scalar(s);
  };

  Mat ga, gb;
  value(&ga, &gb);
  CHECK(max_grad_rel_err(a0, ga, [&]() { return value(nullptr, nullptr); }) < 1e-6);
  CHECK(max_grad_rel_err(b0, gb, [&]() { return value(nullptr, nullptr); }) < 1e-6);
}

TEST_CASE("matmul_nt, cmul, add, sub, add_rowvec, mul_scalar_var gradients") {
  rng::Stream rng(37);
  Mat a0 = random_mat(4, 3, rng);
  Mat b0 = random_mat(5, 3, rng);  // matmul_nt: a * b^T
  Mat r0 = random_mat(1, 3, rng);
  Mat s0 = random_mat(1, 1, rng);
  const Mat w45 = random_mat(4, 5, rng);
  const Mat w43 = random_mat(4, 3, rng);

  auto value = [&](int which, Mat* g, Mat* target) {
    Tape tape;
    Mat grad_a = Mat::Zero(a0.rows(), a0.cols());
    Mat grad_b = Mat::Zero(b0.rows(), b0.cols());
    Mat grad_r = Mat::Zero(1, 3);
    Mat grad_s = Mat::Zero(1, 1);
    Var va = tape.leaf(a0, &grad_a);
    Var vb = tape.leaf(b0, &grad_b);
    Var vr = tape.leaf(r0, &grad_r);
    Var vs = tape.leaf(s0, &grad_s);
    Var y;
    const Mat* w = &w43;
    switch (which) {
      case 0: y = tape.matmul_nt(va, vb); w = &w45; break;
      case 1: y = tape.cmul(va, tape.affine(va, 2.0, 0.2)); break;
      case 2: y = tape.add(va, tape.affine(va, -0.5, 0.1)); break;
      case 3: y = tape.sub(va, tape.cmul(va, va)); break;
      case 4: y = tape.add_rowvec(va, vr); break;
      case 5: y = tape.mul_scalar_var(va, vs); break;
      default: REQUIRE(false);
    }
    Var s = tape.sum_all(tape.cmul(y, tape.constant(*w)));
    if (g != nullptr) {
      tape.backward(s);
      if (target == &a0) *g = grad_a;
      if (target == &b0) *g = grad_b;
      if (target == &r0) *g = grad_r;
      if (target == &s0) *g = grad_s;
    }
    return tape.scalar(s);
  };

  for (int which : {0, 1, 2, 3, 4, 5}) {
    Mat g;
    value(which, &g, &a0);
    CHECK(max_grad_rel_err(a0, g, [&]() { return value(which, nullptr, nullptr); }) < 1e-6);
  }
  {
    Mat g;
    value(0, &g, &b0);
    CHECK(max_grad_rel_err(b0, g, [&]() { return value(0, nullptr, nullptr); }) < 1e-6);
  }
  {
    Mat g;
    value(4, &g, &r0);
    CHECK(max_grad_rel_err(r0, g, [&]() { return value(4, nullptr, nullptr); }) < 1e-6);
  }
  {
    Mat g;
    value(5, &g, &s0);
    CHECK(max_grad_rel_err(s0, g, [&]() { return value(5, nullptr, nullptr); }) < 1e-6);
  }
}

TEST_CASE("layer_norm_rows gradients (input, gain, bias)") {
  rng::Stream rng(41);
  Mat x0 = random_mat(5, 6, rng);
  Mat g0 = random_mat(1, 6, rng, 0.5, 1.5);
  Mat b0 = random_mat(1, 6, rng);
  const Mat w = random_mat(5, 6, rng);

  auto value = [&](Mat* gx, Mat* gg, Mat* gb) {
    Tape tape;
    Mat grad_x = Mat::Zero(5, 6), grad_g = Mat::Zero(1, 6), grad_b = Mat::Zero(1, 6);
    Var vx = tape.leaf(x0, &grad_x);
    Var vg = tape.leaf(g0, &grad_g);
    Var vb = tape.leaf(b0, &grad_b);
    Var y = tape.layer_norm_rows(vx, vg, vb);
    Var s = tape.sum_all(tape.cmul(y, tape.constant(w)));
    if (gx != nullptr) {
      tape.backward(s);
      *gx = grad_x;
      *gg = grad_g;
      *gb = grad_b;
    }
    return tape.scalar(s);
  };

  Mat gx, gg, gb;
  value(&gx, &gg, &gb);
  auto f = [&]() { return value(nullptr, nullptr, nullptr); };
  CHECK(max_grad_rel_err(x0, gx, f) < 1e-5);
  CHECK(max_grad_rel_err(g0, gg, f) < 1e-6);
  CHECK(max_grad_rel_err(b0, gb, f) < 1e-6);
}

TEST_CASE("bce_with_logits matches stable formula and gradient") {
  rng::Stream rng(43);
  Mat logits0 = random_mat(6, 1, rng, -3.0, 3.0);
  Mat targets(6, 1);
  for (int i = 0; i < 6; ++i) targets(i, 0) = rng.uniform() < 0.5 ? 0.0 : 1.0;

  auto value = [&](Mat* g) {
    Tape tape;
    Mat grad = Mat::Zero(6, 1);
    Var vl = tape.leaf(logits0, &grad);
    Var s = tape.mean_all(tape.bce_with_logits(vl, targets));
    if (g != nullptr) {
      tape.backward(s);
      *g = grad;
    }
    return tape.scalar(s);
  };

  Mat g;
  const double loss = value(&g);
  double expect = 0.0;
  for (int i = 0; i < 6; ++i) expect += test_util::oracle_bce_logit(logits0(i, 0), targets(i, 0));
  expect /= 6.0;
  CHECK(loss == doctest::Approx(expect).epsilon(1e-12));
  CHECK(max_grad_rel_err(logits0, g, [&]() { return value(nullptr); }) < 1e-6);

  // stability probe: the full stage-1 range stays finite
  Tape tape;
  Mat extreme(4, 1);
  extreme << -100.0, -50.0, 50.0, 100.0;
  Mat ones = Mat::Ones(4, 1);
  Var v = tape.constant(extreme);
  const Mat& out = tape.value(tape.bce_with_logits(v, ones));
  CHECK(out.allFinite());
}

TEST_CASE("gradients accumulate across repeated use of one leaf") {
  // y = x * x (matrix square via matmul with itself)
  rng::Stream rng(47);
  Mat x0 = random_mat(3, 3, rng);
  const Mat w = random_mat(3, 3, rng);

  auto value = [&](Mat* g) {
    Tape tape;
    Mat grad = Mat::Zero(3, 3);
    Var vx = tape.leaf(x0, &grad);
    Var s = tape.sum_all(tape.cmul(tape.matmul(vx, vx), tape.constant(w)));
    if (g != nullptr) {
      tape.backward(s);
      *g = grad;
    }
    return tape.scalar(s);
  };
  Mat g;
  value(&g);
  CHECK(max_grad_rel_err(x0, g, [&]() { return value(nullptr); }) < 1e-6);
}

TEST_CASE("backward accumulates into sinks over multiple tapes") {
  Mat x = Mat::Ones(2, 2);
  Mat sink = Mat::Zero(2, 2);
  for (int k = 0; k < 3; ++k) {
    Tape tape;
    Var vx = tape.leaf(x, &sink);
    tape.backward(tape.sum_all(vx));
  }
  CHECK(sink(0, 0) == doctest::Approx(3.0));
  CHECK(sink(1, 1) == doctest::Approx(3.0));
}
