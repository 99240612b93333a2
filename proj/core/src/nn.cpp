// SPDX-License-Identifier: Apache-2.0
#include "prosodet/nn.hpp"

#include <cmath>

namespace prosodet::nn {

Mat xavier_uniform(Eigen::Index rows, Eigen::Index cols, rng::Stream& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = rng.uniform(-bound, bound);
    }
  }
  return m;
}

void Linear::init(const std::string& name, int in, int out, rng::Stream& rng) {
  w.name = name + ".w";
  w.value = xavier_uniform(in, out, rng);
  b.name = name + ".b";
  b.value = Mat::Zero(1, out);
  w.zero_grad();
  b.zero_grad();
}

Var Linear::forward(Tape& tape, Var x) const {
  return tape.add_rowvec(tape.matmul(x, w.use(tape)), b.use(tape));
}

void LayerNorm::init(const std::string& name, int dim) {
  gain.name = name + ".gain";
  gain.value = Mat::Ones(1, dim);
  bias.name = name + ".bias";
  bias.value = Mat::Zero(1, dim);
  gain.zero_grad();
  bias.zero_grad();
}

Var LayerNorm::forward(Tape& tape, Var x) const {
  return tape.layer_norm_rows(x, gain.use(tape), bias.use(tape));
}

void Conv1d::init(const std::string& name, int in, int out, int kernel_size, int stride_len,
                  rng::Stream& rng) {
  kernel = kernel_size;
  stride = stride_len;
  in_channels = in;
  out_channels = out;
  w.name = name + ".w";
  w.value = xavier_uniform(static_cast<Eigen::Index>(kernel) * in, out, rng);
  b.name = name + ".b";
  b.value = Mat::Zero(1, out);
  w.zero_grad();
  b.zero_grad();
}

Var Conv1d::forward(Tape& tape, Var x) const {
  const int pad_total = kernel - stride;
  const int pad_left = pad_total / 2;
  const int pad_right = pad_total - pad_left;
  Var cols = tape.im2col(x, kernel, stride, pad_left, pad_right);
  return tape.add_rowvec(tape.matmul(cols, w.use(tape)), b.use(tape));
}

void GRU::init(const std::string& name, int in, int hidden_size, rng::Stream& rng) {
  in_dim = in;
  hidden = hidden_size;
  auto init_w = [&](Parameter& p, const char* suffix, int rows) {
    p.name = name + "." + suffix;
    p.value = xavier_uniform(rows, hidden, rng);
    p.zero_grad();
  };
  init_w(w_ir, "w_ir", in);
  init_w(w_iz, "w_iz", in);
  init_w(w_in, "w_in", in);
  init_w(w_hr, "w_hr", hidden);
  init_w(w_hz, "w_hz", hidden);
  init_w(w_hn, "w_hn", hidden);
  auto init_b = [&](Parameter& p, const char* suffix) {
    p.name = name + "." + suffix;
    p.value = Mat::Zero(1, hidden);
    p.zero_grad();
  };
  init_b(b_r, "b_r");
  init_b(b_z, "b_z");
  init_b(b_in, "b_in");
  init_b(b_hn, "b_hn");
}

Var GRU::forward(Tape& tape, Var x) const {
  const int frames = static_cast<int>(tape.value(x).rows());

  Var vw_ir = w_ir.use(tape), vw_iz = w_iz.use(tape), vw_in = w_in.use(tape);
  Var vw_hr = w_hr.use(tape), vw_hz = w_hz.use(tape), vw_hn = w_hn.use(tape);
  Var vb_r = b_r.use(tape), vb_z = b_z.use(tape);
  Var vb_in = b_in.use(tape), vb_hn = b_hn.use(tape);

  // input projections for all frames at once; per-step work stays O(hidden^2)
  Var xr = tape.add_rowvec(tape.matmul(x, vw_ir), vb_r);
  Var xz = tape.add_rowvec(tape.matmul(x, vw_iz), vb_z);
  Var xn = tape.add_rowvec(tape.matmul(x, vw_in), vb_in);

  Var h = tape.constant(Mat::Zero(1, hidden));
  std::vector<Var> outputs;
  outputs.reserve(frames);
  for (int t = 0; t < frames; ++t) {
    Var r = tape.sigmoid(tape.add(tape.row(xr, t), tape.matmul(h, vw_hr)));
    Var z = tape.sigmoid(tape.add(tape.row(xz, t), tape.matmul(h, vw_hz)));
    Var hn = tape.add_rowvec(tape.matmul(h, vw_hn), vb_hn);
    Var n = tape.tanh(tape.add(tape.row(xn, t), tape.cmul(r, hn)));
    h = tape.add(tape.cmul(z, h), tape.cmul(tape.affine(z, -1.0, 1.0), n));
    outputs.push_back(h);
  }
  return tape.stack_rows(outputs);
}

void GRU::visit(const ParamVisitor& fn) {
  fn(w_ir);
  fn(w_iz);
  fn(w_in);
  fn(w_hr);
  fn(w_hz);
  fn(w_hn);
  fn(b_r);
  fn(b_z);
  fn(b_in);
  fn(b_hn);
}

Mat sinusoidal_positions(int frames, int dim) {
  Mat pos(frames, dim);
  for (int t = 0; t < frames; ++t) {
    for (int i = 0; i < dim; ++i) {
      const int pair = i / 2;
      const double rate = std::pow(10000.0, -2.0 * pair / dim);
      const double angle = t * rate;
      pos(t, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pos;
}

}  // namespace prosodet::nn
