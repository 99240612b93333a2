// SPDX-License-Identifier: Apache-2.0
#include "prosodet/autodiff.hpp"

#include <cmath>
#include <memory>

#include "prosodet/errors.hpp"

namespace prosodet::ad {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

int Tape::push(Mat value, bool requires_grad, std::function<void(Tape&)> backprop) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

Mat& Tape::grad_of(int id) {
  Node& n = nodes_[id];
  if (!n.grad_live) {
    n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    n.grad_live = true;
  }
  return n.grad;
}

Var Tape::constant(Mat value) { return {push(std::move(value), false, nullptr)}; }

Var Tape::leaf(const Mat& value, Mat* grad_sink) {
  const int id = push(value, true, nullptr);
  if (grad_sink != nullptr) sinks_.emplace_back(id, grad_sink);
  return {id};
}

Var Tape::add(Var a, Var b) {
  if (val(a.id).rows() != val(b.id).rows() || val(a.id).cols() != val(b.id).cols()) {
    throw NumericalError("add: shape mismatch");
  }
  const bool rg = needs(a) || needs(b);
  Var v{push(val(a.id) + val(b.id), rg, nullptr)};
  if (rg) {
    const int ia = a.id, ib = b.id, self = v.id;
    nodes_[self].backprop = [ia, ib, self](Tape& t) {
      const Mat& g = t.nodes_[self].grad;
      if (t.nodes_[ia].requires_grad) t.grad_of(ia) += g;
      if (t.nodes_[ib].requires_grad) t.grad_of(ib) += g;
    };
  }
  return v;
}

Var Tape::add_rowvec(Var a, Var b) {
  if (val(b.id).rows() != 1 || val(a.id).cols() != val(b.id).cols()) {
    throw NumericalError("add_rowvec: shape mismatch");
  }
  const bool rg = needs(a) || needs(b);
  Mat out = val(a.id);
  out.rowwise() += val(b.id).row(0);
  Var v{push(std::move(out), rg, nullptr)};
  if (rg) {
    const int ia = a.id, ib = b.id, self = v.id;
    nodes_[self].backprop = [ia, ib, self](Tape& t) {
      const Mat& g = t.nodes_[self].grad;
      if (t.nodes_[ia].requires_grad) t.grad_of(ia) += g;
      if (t.nodes_[ib].requires_grad) t.grad_of(ib) += g.colwise().sum();
    };
  }
  return v;
}

Var Tape::sub(Var a, Var b) {
  const bool rg = needs(a) || needs(b);
  Var v{push(val(a.id) - val(b.id), rg, nullptr)};
  if (rg) {
    const int ia = a.id, ib = b.id, self = v.id;
    nodes_[self].backprop = [ia, ib, self](Tape& t) {
      const Mat& g = t.nodes_[self].grad;
      if (t.nodes_[ia].requires_grad) t.grad_of(ia) += g;
      if (t.nodes_[ib].requires_grad) t.grad_of(ib) -= g;
    };
  }
  return v;
}

Var Tape::cmul(Var a, Var b) {
  const bool rg = needs(a) || needs(b);
  Var v{push(val(a.id).cwiseProduct(val(b.id)), rg, nullptr)};
  if (rg) {
    const int ia = a.id, ib = b.id, self = v.id;
    nodes_[self].backprop = [ia, ib, self](Tape& t) {
      const Mat& g = t.nodes_[self].grad;
      if (t.nodes_[ia].requires_grad) t.grad_of(ia) += g.cwiseProduct(t.val(ib));
      if (t.nodes_[ib].requires_grad) t.grad_of(ib) += g.cwiseProduct(t.val(ia));
    };
  }
  return v;
}

Var Tape::affine(Var a, double scale, double shift) {
  const bool rg = needs(a);
  Var v{push((val(a.id).array() * scale + shift).matrix(), rg, nullptr)};
  if (rg) {
    const int ia = a.id, self = v.id;
    nodes_[self].backprop = [ia, self, scale](Tape& t) {
      t.grad_of(ia) += t.nodes_[self].grad * scale;
    };
  }
  return v;
}

Var Tape::mul_scalar_var(Var a, Var s) {
  if (val(s.id).rows() != 1 || val(s.id).cols() != 1) {
    throw NumericalError("mul_scalar_var: scalar must be 1x1");
  }
  const bool rg = needs(a) || needs(s);
  Var v{push(val(a.id) * val(s.id)(0, 0), rg, nullptr)};
  if (rg) {
    const int ia = a.id, is = s.id, self = v.id;
    nodes_[self].backprop = [ia, is, self](Tape& t) {
      const Mat& g = t.nodes_[self].grad;
      if (t.nodes_[ia].requires_grad) t.grad_of(ia) += g * t.val(is)(0, 0);
      if (t.nodes_[is].requires_grad) t.grad_of(is)(0, 0) += g.cwiseProduct(t.val(ia)).sum();
    };
  }
  return v;
}

Var Tape::matmul(Var a, Var b) {
  if (val(a.id).cols() != val(b.id).rows()) throw NumericalError("matmul: shape mismatch");
  const bool rg = needs(a) || needs(b);
  Var v{push(val(a.id) * val(b.id), rg, nullptr)};
  if (rg) {
    const int ia = a.id, ib = b.id, self = v.id;
    nodes_[self].backprop = [ia, ib, self](Tape& t) {
      const Mat& g = t.nodes_[self].grad;
      if (t.nodes_[ia].requires_grad) t.grad_of(ia).noalias() += g * t.val(ib).transpose();
      if (t.nodes_[ib].requires_grad) t.grad_of(ib).noalias() += t.val(ia).transpose() * g;
    };
  }
  return v;
}

Var Tape::matmul_nt(Var a, Var b) {
  if (val(a.id).cols() != val(b.id).cols()) throw NumericalError("matmul_nt: shape mismatch");
  const bool rg = needs(a) || needs(b);
  Var v{push(val(a.id) * val(b.id).transpose(), rg, nullptr)};
  if (rg) {
    const int ia = a.id, ib = b.id, self = v.id;
    nodes_[self].backprop = [ia, ib, self](Tape& t) {
      const Mat& g = t.nodes_[self].grad;
      if (t.nodes_[ia].requires_grad) t.grad_of(ia).noalias() += g * t.val(ib);
      if (t.nodes_[ib].requires_grad) t.grad_of(ib).noalias() += g.transpose() * t.val(ia);
    };
  }
  return v;
}

Var Tape::sigmoid(Var a) {
  Mat y = val(a.id).unaryExpr([](double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  });
  const bool rg = needs(a);
  Var v{push(std::move(y), rg, nullptr)};
  if (rg) {
    const int ia = a.id, self = v.id;
    nodes_[self].backprop = [ia, self](Tape& t) {
      const Mat& y = t.val(self);
      t.grad_of(ia) +=
          t.nodes_[self].grad.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix()));
    };
  }
  return v;
}

Var Tape::tanh(Var a) {
  Mat y = val(a.id).array().tanh().matrix();
  const bool rg = needs(a);
  Var v{push(std::move(y), rg, nullptr)};
  if (rg) {
    const int ia = a.id, self = v.id;
    nodes_[self].backprop = [ia, self](Tape& t) {
      const auto y = t.val(self).array();
      t.grad_of(ia) += (t.nodes_[self].grad.array() * (1.0 - y * y)).matrix();
    };
  }
  return v;
}

Var Tape::gelu(Var a) {
  Mat y = val(a.id).unaryExpr(
      [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); });
  const bool rg = needs(a);
  Var v{push(std::move(y), rg, nullptr)};
  if (rg) {
    const int ia = a.id, self = v.id;
    nodes_[self].backprop = [ia, self](Tape& t) {
      const Mat dgelu = t.val(ia).unaryExpr([](double x) {
        const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        return cdf + x * pdf;
      });
      t.grad_of(ia) += t.nodes_[self].grad.cwiseProduct(dgelu);
    };
  }
  return v;
}

Var Tape::softmax_rows(Var a) {
  Mat y = val(a.id);
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double m = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - m).exp();
    y.row(r) /= y.row(r).sum();
  }
  const bool rg = needs(a);
  Var v{push(std::move(y), rg, nullptr)};
  if (rg) {
    const int ia = a.id, self = v.id;
    nodes_[self].backprop = [ia, self](Tape& t) {
      const Mat& y = t.val(self);
      const Mat& g = t.nodes_[self].grad;
      Mat& da = t.grad_of(ia);
      for (Eigen::Index r = 0; r < y.rows(); ++r) {
        const double dot = g.row(r).dot(y.row(r));
        da.row(r) += y.row(r).cwiseProduct((g.row(r).array() - dot).matrix());
      }
    };
  }
  return v;
}

Var Tape::logsumexp_rows(Var a) {
  const Mat& x = val(a.id);
  Mat y(x.rows(), 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    y(r, 0) = m + std::log((x.row(r).array() - m).exp().sum());
  }
  const bool rg = needs(a);
  Var v{push(std::move(y), rg, nullptr)};
  if (rg) {
    const int ia = a.id, self = v.id;
    nodes_[self].backprop = [ia, self](Tape& t) {
      const Mat& x = t.val(ia);
      const Mat& lse = t.val(self);
      const Mat& g = t.nodes_[self].grad;
      Mat& da = t.grad_of(ia);
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        da.row(r) += g(r, 0) * (x.row(r).array() - lse(r, 0)).exp().matrix();
      }
    };
  }
  return v;
}

Var Tape::bce_with_logits(Var logits, const Mat& targets) {
  const Mat& l = val(logits.id);
  if (l.rows() != targets.rows() || l.cols() != targets.cols()) {
    throw NumericalError("bce_with_logits: shape mismatch");
  }
  Mat y(l.rows(), l.cols());
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    const double z = l(i);
    const double t = targets(i);
    // max(z,0) - z*t + log(1 + exp(-|z|))
    y(i) = std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::fabs(z)));
  }
  const bool rg = needs(logits);
  Var v{push(std::move(y), rg, nullptr)};
  if (rg) {
    const int il = logits.id, self = v.id;
    const Mat tgt = targets;
    nodes_[self].backprop = [il, self, tgt](Tape& t) {
      const Mat& l = t.val(il);
      Mat sig = l.unaryExpr([](double x) {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      });
      t.grad_of(il) += t.nodes_[self].grad.cwiseProduct(sig - tgt);
    };
  }
  return v;
}

Var Tape::layer_norm_rows(Var x, Var gain, Var bias, double eps) {
  const Mat& in = val(x.id);
  const Eigen::Index d = in.cols();
  if (val(gain.id).rows() != 1 || val(gain.id).cols() != d || val(bias.id).rows() != 1 ||
      val(bias.id).cols() != d) {
    throw NumericalError("layer_norm_rows: gain/bias must be 1 x d");
  }
  Mat xhat(in.rows(), d);
  Mat inv_std(in.rows(), 1);
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const double mean = in.row(r).mean();
    const double var = (in.row(r).array() - mean).square().mean();
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std(r, 0) = is;
    xhat.row(r) = ((in.row(r).array() - mean) * is).matrix();
  }
  Mat out = xhat;
  out.array().rowwise() *= val(gain.id).row(0).array();
  out.rowwise() += val(bias.id).row(0);

  const bool rg = needs(x) || needs(gain) || needs(bias);
  Var v{push(std::move(out), rg, nullptr)};
  if (rg) {
    const int ix = x.id, ig = gain.id, ib = bias.id, self = v.id;
    // keep xhat and inv_std for the backward pass
    auto xhat_p = std::make_shared<Mat>(std::move(xhat));
    auto istd_p = std::make_shared<Mat>(std::move(inv_std));
    nodes_[self].backprop = [ix, ig, ib, self, xhat_p, istd_p](Tape& t) {
      const Mat& g = t.nodes_[self].grad;
      const Mat& xh = *xhat_p;
      if (t.nodes_[ib].requires_grad) t.grad_of(ib) += g.colwise().sum();
      if (t.nodes_[ig].requires_grad) t.grad_of(ig) += g.cwiseProduct(xh).colwise().sum();
      if (t.nodes_[ix].requires_grad) {
        Mat& dx = t.grad_of(ix);
        const auto gamma = t.val(ig).row(0).array();
        using RowArray = Eigen::Array<double, 1, Eigen::Dynamic>;
        for (Eigen::Index r = 0; r < xh.rows(); ++r) {
          const RowArray gy = g.row(r).array() * gamma;
          const double mean_gy = gy.mean();
          const double mean_gy_xhat = (gy * xh.row(r).array()).mean();
          dx.row(r) += ((*istd_p)(r, 0) *
                        (gy - mean_gy - xh.row(r).array() * mean_gy_xhat))
                           .matrix();
        }
      }
    };
  }
  return v;
}

Var Tape::mean_all(Var a) {
  const double n = static_cast<double>(val(a.id).size());
  Mat y(1, 1);
  y(0, 0) = val(a.id).sum() / n;
  const bool rg = needs(a);
  Var v{push(std::move(y), rg, nullptr)};
  if (rg) {
    const int ia = a.id, self = v.id;
    nodes_[self].backprop = [ia, self, n](Tape& t) {
      t.grad_of(ia).array() += t.nodes_[self].grad(0, 0) / n;
    };
  }
  return v;
}

Var Tape::sum_all(Var a) {
  Mat y(1, 1);
  y(0, 0) = val(a.id).sum();
  const bool rg = needs(a);
  Var v{push(std::move(y), rg, nullptr)};
  if (rg) {
    const int ia = a.id, self = v.id;
    nodes_[self].backprop = [ia, self](Tape& t) {
      t.grad_of(ia).array() += t.nodes_[self].grad(0, 0);
    };
  }
  return v;
}

Var Tape::mean_over_rows(Var a) {
  const double n = static_cast<double>(val(a.id).rows());
  Mat y = val(a.id).colwise().mean();
  const bool rg = needs(a);
  Var v{push(std::move(y), rg, nullptr)};
  if (rg) {
    const int ia = a.id, self = v.id;
    nodes_[self].backprop = [ia, self, n](Tape& t) {
      t.grad_of(ia).rowwise() += (t.nodes_[self].grad.row(0) / n);
    };
  }
  return v;
}

Var Tape::row(Var a, int r) { return slice_rows(a, r, 1); }

Var Tape::slice_rows(Var a, int r0, int n) {
  if (r0 < 0 || n <= 0 || r0 + n > val(a.id).rows()) {
    throw NumericalError("slice_rows: out of range");
  }
  const bool rg = needs(a);
  Var v{push(val(a.id).middleRows(r0, n), rg, nullptr)};
  if (rg) {
    const int ia = a.id, self = v.id;
    nodes_[self].backprop = [ia, self, r0, n](Tape& t) {
      t.grad_of(ia).middleRows(r0, n) += t.nodes_[self].grad;
    };
  }
  return v;
}

Var Tape::slice_cols(Var a, int c0, int n) {
  if (c0 < 0 || n <= 0 || c0 + n > val(a.id).cols()) {
    throw NumericalError("slice_cols: out of range");
  }
  const bool rg = needs(a);
  Var v{push(val(a.id).middleCols(c0, n), rg, nullptr)};
  if (rg) {
    const int ia = a.id, self = v.id;
    nodes_[self].backprop = [ia, self, c0, n](Tape& t) {
      t.grad_of(ia).middleCols(c0, n) += t.nodes_[self].grad;
    };
  }
  return v;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw NumericalError("concat_cols: empty input");
  const Eigen::Index rows = val(parts[0].id).rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (Var p : parts) {
    if (val(p.id).rows() != rows) throw NumericalError("concat_cols: row mismatch");
    cols += val(p.id).cols();
    rg = rg || needs(p);
  }
  Mat out(rows, cols);
  Eigen::Index c = 0;
  std::vector<int> ids;
  std::vector<int> offs;
  for (Var p : parts) {
    const Eigen::Index w = val(p.id).cols();
    out.middleCols(c, w) = val(p.id);
    ids.push_back(p.id);
    offs.push_back(static_cast<int>(c));
    c += w;
  }
  Var v{push(std::move(out), rg, nullptr)};
  if (rg) {
    const int self = v.id;
    nodes_[self].backprop = [self, ids, offs](Tape& t) {
      const Mat& g = t.nodes_[self].grad;
      for (size_t k = 0; k < ids.size(); ++k) {
        if (!t.nodes_[ids[k]].requires_grad) continue;
        const Eigen::Index w = t.val(ids[k]).cols();
        t.grad_of(ids[k]) += g.middleCols(offs[k], w);
      }
    };
  }
  return v;
}

Var Tape::stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw NumericalError("stack_rows: empty input");
  const Eigen::Index cols = val(rows[0].id).cols();
  bool rg = false;
  for (Var r : rows) {
    if (val(r.id).rows() != 1 || val(r.id).cols() != cols) {
      throw NumericalError("stack_rows: each part must be 1 x d");
    }
    rg = rg || needs(r);
  }
  Mat out(static_cast<Eigen::Index>(rows.size()), cols);
  std::vector<int> ids;
  ids.reserve(rows.size());
  for (size_t k = 0; k < rows.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = val(rows[k].id).row(0);
    ids.push_back(rows[k].id);
  }
  Var v{push(std::move(out), rg, nullptr)};
  if (rg) {
    const int self = v.id;
    nodes_[self].backprop = [self, ids](Tape& t) {
      const Mat& g = t.nodes_[self].grad;
      for (size_t k = 0; k < ids.size(); ++k) {
        if (!t.nodes_[ids[k]].requires_grad) continue;
        t.grad_of(ids[k]).row(0) += g.row(static_cast<Eigen::Index>(k));
      }
    };
  }
  return v;
}

Var Tape::element(Var a, int r, int c) {
  if (r < 0 || c < 0 || r >= val(a.id).rows() || c >= val(a.id).cols()) {
    throw NumericalError("element: out of range");
  }
  Mat y(1, 1);
  y(0, 0) = val(a.id)(r, c);
  const bool rg = needs(a);
  Var v{push(std::move(y), rg, nullptr)};
  if (rg) {
    const int ia = a.id, self = v.id;
    nodes_[self].backprop = [ia, self, r, c](Tape& t) {
      t.grad_of(ia)(r, c) += t.nodes_[self].grad(0, 0);
    };
  }
  return v;
}

Var Tape::im2col(Var a, int kernel, int stride, int pad_left, int pad_right) {
  const Mat& x = val(a.id);
  const int n = static_cast<int>(x.rows());
  const int c = static_cast<int>(x.cols());
  if (kernel <= 0 || stride <= 0) throw NumericalError("im2col: bad kernel/stride");
  const int padded = n + pad_left + pad_right;
  if (padded < kernel) throw NumericalError("im2col: input shorter than kernel");
  const int n_out = (padded - kernel) / stride + 1;

  Mat out = Mat::Zero(n_out, kernel * c);
  for (int t = 0; t < n_out; ++t) {
    const int start = t * stride - pad_left;
    for (int j = 0; j < kernel; ++j) {
      const int src = start + j;
      if (src < 0 || src >= n) continue;
      out.block(t, j * c, 1, c) = x.row(src);
    }
  }
  const bool rg = needs(a);
  Var v{push(std::move(out), rg, nullptr)};
  if (rg) {
    const int ia = a.id, self = v.id;
    nodes_[self].backprop = [ia, self, kernel, stride, pad_left, n, c](Tape& t) {
      const Mat& g = t.nodes_[self].grad;
      Mat& dx = t.grad_of(ia);
      for (int ti = 0; ti < g.rows(); ++ti) {
        const int start = ti * stride - pad_left;
        for (int j = 0; j < kernel; ++j) {
          const int src = start + j;
          if (src < 0 || src >= n) continue;
          dx.row(src) += g.block(ti, j * c, 1, c);
        }
      }
    };
  }
  return v;
}

void Tape::backward(Var root) {
  Node& r = nodes_[root.id];
  if (r.value.rows() != 1 || r.value.cols() != 1) {
    throw NumericalError("backward: root must be a 1x1 scalar");
  }
  if (!r.requires_grad) {
    throw NumericalError("backward: root does not depend on any tracked parameter");
  }
  grad_of(root.id).setOnes();
  for (int id = root.id; id >= 0; --id) {
    Node& node = nodes_[id];
    if (node.requires_grad && node.grad_live && node.backprop) {
      node.backprop(*this);
    }
  }
  for (auto& [id, sink] : sinks_) {
    Node& node = nodes_[id];
    if (!node.grad_live) continue;
    if (sink->rows() != node.grad.rows() || sink->cols() != node.grad.cols()) {
      *sink = Mat::Zero(node.grad.rows(), node.grad.cols());
    }
    *sink += node.grad;
  }
}

}  // namespace prosodet::ad
