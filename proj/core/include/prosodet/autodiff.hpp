// SPDX-License-Identifier: Apache-2.0
//
// Minimal reverse-mode autodiff over double matrices. A Tape owns the
// computation graph for one forward pass; nodes are appended in topological
// order, so backward() is a single reverse sweep. Parameters enter via
// leaf(value, &grad_sink): after backward() their gradients are accumulated
// into the sink matrices, which lets one optimizer step sum gradients over
// several per-utterance tapes.
#ifndef PROSODET_AUTODIFF_HPP
#define PROSODET_AUTODIFF_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace prosodet::ad {

using Mat = Eigen::MatrixXd;

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  Tape() { nodes_.reserve(256); }

  // --- graph construction -------------------------------------------------
  Var constant(Mat value);                   // no gradient tracked
  Var leaf(const Mat& value, Mat* grad_sink);  // parameter or probed input

  Var add(Var a, Var b);          // same shape
  Var add_rowvec(Var a, Var b);   // a: T x d, b: 1 x d broadcast over rows
  Var sub(Var a, Var b);
  Var cmul(Var a, Var b);         // elementwise
  Var affine(Var a, double scale, double shift);
  Var mul_scalar_var(Var a, Var s);  // s: 1 x 1

  Var matmul(Var a, Var b);       // a * b
  Var matmul_nt(Var a, Var b);    // a * b^T

  Var sigmoid(Var a);
  Var tanh(Var a);
  Var gelu(Var a);                // exact erf form

  Var softmax_rows(Var a);
  Var logsumexp_rows(Var a);      // T x n -> T x 1, numerically stable
  // Stable sigmoid binary cross-entropy from logits; targets constant.
  // Returns per-element losses (same shape as logits).
  Var bce_with_logits(Var logits, const Mat& targets);

  Var layer_norm_rows(Var x, Var gain, Var bias, double eps = 1e-5);

  Var mean_all(Var a);            // -> 1 x 1
  Var sum_all(Var a);             // -> 1 x 1
  Var mean_over_rows(Var a);      // T x d -> 1 x d

  Var row(Var a, int r);                    // -> 1 x d
  Var slice_rows(Var a, int r0, int n);
  Var slice_cols(Var a, int c0, int n);
  Var concat_cols(const std::vector<Var>& parts);
  Var stack_rows(const std::vector<Var>& rows);  // each 1 x d -> n x d
  Var element(Var a, int r, int c);              // -> 1 x 1

  // Unfold a [N x C] sequence into [N_out x k*C] conv patches.
  // N_out = (N + pad_left + pad_right - kernel) / stride + 1.
  Var im2col(Var a, int kernel, int stride, int pad_left, int pad_right);

  // --- execution ------------------------------------------------------------
  // root must be 1 x 1; accumulates into every leaf's grad sink.
  void backward(Var root);

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const { return nodes_[v.id].value(0, 0); }
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    bool grad_live = false;  // grad allocated and holding accumulation
    std::function<void(Tape&)> backprop;  // empty for constants/leaves
  };

  int push(Mat value, bool requires_grad, std::function<void(Tape&)> backprop);
  Mat& grad_of(int id);  // allocate-on-demand zero grad
  bool needs(Var v) const { return nodes_[v.id].requires_grad; }
  const Mat& val(int id) const { return nodes_[id].value; }

  std::vector<Node> nodes_;
  std::vector<std::pair<int, Mat*>> sinks_;
};

}  // namespace prosodet::ad

#endif  // PROSODET_AUTODIFF_HPP
