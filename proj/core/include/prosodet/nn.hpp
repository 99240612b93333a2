// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_NN_HPP
#define PROSODET_NN_HPP

#include <functional>
#include <string>
#include <vector>

#include "prosodet/autodiff.hpp"
#include "prosodet/rng.hpp"

namespace prosodet::nn {

using ad::Mat;
using ad::Tape;
using ad::Var;

struct Parameter {
  std::string name;
  Mat value;
  mutable Mat grad;  // scratch accumulator, not part of the logical state

  void zero_grad() const { grad = Mat::Zero(value.rows(), value.cols()); }
  Var use(Tape& tape) const { return tape.leaf(value, &grad); }
};

using ParamVisitor = std::function<void(Parameter&)>;

Mat xavier_uniform(Eigen::Index rows, Eigen::Index cols, rng::Stream& rng);

struct Linear {
  Parameter w;  // in x out
  Parameter b;  // 1 x out

  void init(const std::string& name, int in, int out, rng::Stream& rng);
  Var forward(Tape& tape, Var x) const;  // T x in -> T x out
  void visit(const ParamVisitor& fn) {
    fn(w);
    fn(b);
  }
};

struct LayerNorm {
  Parameter gain;  // 1 x d
  Parameter bias;  // 1 x d

  void init(const std::string& name, int dim);
  Var forward(Tape& tape, Var x) const;
  void visit(const ParamVisitor& fn) {
    fn(gain);
    fn(bias);
  }
};

// Strided 1-D convolution over a [T x C_in] sequence via im2col. Padding is
// chosen so T_out == T / stride whenever T is a multiple of the stride.
struct Conv1d {
  Parameter w;  // (kernel * in) x out
  Parameter b;  // 1 x out
  int kernel = 1;
  int stride = 1;
  int in_channels = 1;
  int out_channels = 1;

  void init(const std::string& name, int in, int out, int kernel_size, int stride_len,
            rng::Stream& rng);
  Var forward(Tape& tape, Var x) const;
  void visit(const ParamVisitor& fn) {
    fn(w);
    fn(b);
  }
};

// Unidirectional single-layer gated recurrent unit. Gate equations follow
// the reset-before-candidate convention:
//   r_t = sig(x W_ir + h W_hr + b_r)
//   z_t = sig(x W_iz + h W_hz + b_z)
//   n_t = tanh(x W_in + b_in + r_t . (h W_hn + b_hn))
//   h_t = z_t . h_{t-1} + (1 - z_t) . n_t
struct GRU {
  Parameter w_ir, w_iz, w_in;  // in x hidden
  Parameter w_hr, w_hz, w_hn;  // hidden x hidden
  Parameter b_r, b_z, b_in, b_hn;  // 1 x hidden
  int in_dim = 0;
  int hidden = 0;

  void init(const std::string& name, int in, int hidden_size, rng::Stream& rng);
  Var forward(Tape& tape, Var x) const;  // T x in -> T x hidden
  void visit(const ParamVisitor& fn);
};

// Fixed sin/cos position table, rows are frames.
Mat sinusoidal_positions(int frames, int dim);

}  // namespace prosodet::nn

#endif  // PROSODET_NN_HPP
