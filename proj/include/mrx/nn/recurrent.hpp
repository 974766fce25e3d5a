// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef MRX_NN_RECURRENT_HPP
#define MRX_NN_RECURRENT_HPP

#include <memory>
#include <vector>

#include "mrx/nn/tensor.hpp"

namespace mrx::nn {

// LSTM weights, input-major: wx [in x 4H], wh [H x 4H], b [4H]. Gate
// blocks along the 4H axis are (input, forget, cell, output).
struct LstmDirParams {
  Var wx, wh, b;

  std::int64_t hidden() const { return wh->shape[0]; }
};

struct LstmCellOut {
  Var h, c;
};

// One LSTM step from primitive ops. Used for unit-level gradient checks;
// sequence processing goes through the fused bilstm_layer below.
inline LstmCellOut lstm_cell(const Var& x, const Var& h_prev, const Var& c_prev,
                             const LstmDirParams& p) {
  const std::int64_t h = p.hidden();
  Var z = add_rowvec(add(matmul(x, p.wx), matmul(h_prev, p.wh)), p.b);
  const Var i = sigmoid(slice_cols(z, 0, h));
  const Var f = sigmoid(slice_cols(z, h, 2 * h));
  const Var g = tanh_op(slice_cols(z, 2 * h, 3 * h));
  const Var o = sigmoid(slice_cols(z, 3 * h, 4 * h));
  const Var c = add(mul(f, c_prev), mul(i, g));
  return {mul(o, tanh_op(c)), c};
}

namespace detail {

// Saved forward state for one direction of a fused BiLSTM node.
struct LstmTrace {
  Mat gates;   // [N x 4H], post-nonlinearity (i, f, g, o)
  Mat c;       // [N x H]
  Mat tanh_c;  // [N x H]
  Mat h_prev;  // [N x H], state entering each step (zeros at the start)
  Mat c_prev;  // [N x H]
};

inline void lstm_run_direction(const TensorData& x, const LstmDirParams& p, bool reverse,
                               LstmTrace& trace, Mat& h_out) {
  const std::int64_t n = x.shape[0];
  const std::int64_t hid = p.hidden();
  const Mat pre = as_mat(x) * as_mat(*p.wx);  // [N x 4H]
  const ConstMatMap wh = as_mat(*p.wh);
  const ConstVecMap bias(p.b->value.data(), 4 * hid);

  trace.gates.resize(n, 4 * hid);
  trace.c.resize(n, hid);
  trace.tanh_c.resize(n, hid);
  trace.h_prev.setZero(n, hid);
  trace.c_prev.setZero(n, hid);
  h_out.resize(n, hid);

  Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(hid);
  Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(hid);
  Eigen::RowVectorXd z(4 * hid);
  for (std::int64_t step = 0; step < n; ++step) {
    const std::int64_t t = reverse ? n - 1 - step : step;
    trace.h_prev.row(t) = h;
    trace.c_prev.row(t) = c;
    z = pre.row(t) + h * wh + bias.transpose();
    for (std::int64_t k = 0; k < hid; ++k) {
      const double i = 1.0 / (1.0 + std::exp(-z[k]));
      const double f = 1.0 / (1.0 + std::exp(-z[hid + k]));
      const double g = std::tanh(z[2 * hid + k]);
      const double o = 1.0 / (1.0 + std::exp(-z[3 * hid + k]));
      c[k] = f * c[k] + i * g;
      const double tc = std::tanh(c[k]);
      h[k] = o * tc;
      trace.gates(t, k) = i;
      trace.gates(t, hid + k) = f;
      trace.gates(t, 2 * hid + k) = g;
      trace.gates(t, 3 * hid + k) = o;
      trace.c(t, k) = c[k];
      trace.tanh_c(t, k) = tc;
    }
    h_out.row(t) = h;
  }
}

// BPTT for one direction. grad_h [N x H] is dL/dh at every step; gradients
// are accumulated into the parameter tensors and dL/dx.
inline void lstm_backprop_direction(const TensorData& x, const LstmDirParams& p, bool reverse,
                                    const LstmTrace& trace, const Mat& grad_h,
                                    Mat* grad_x_acc) {
  const std::int64_t n = x.shape[0];
  const std::int64_t hid = p.hidden();
  const ConstMatMap wh = as_mat(*p.wh);

  Mat dz_all = Mat::Zero(n, 4 * hid);
  Eigen::RowVectorXd dh = Eigen::RowVectorXd::Zero(hid);
  Eigen::RowVectorXd dc = Eigen::RowVectorXd::Zero(hid);
  for (std::int64_t step = n - 1; step >= 0; --step) {
    const std::int64_t t = reverse ? n - 1 - step : step;
    dh += grad_h.row(t);
    for (std::int64_t k = 0; k < hid; ++k) {
      const double i = trace.gates(t, k);
      const double f = trace.gates(t, hid + k);
      const double g = trace.gates(t, 2 * hid + k);
      const double o = trace.gates(t, 3 * hid + k);
      const double tc = trace.tanh_c(t, k);
      const double d_o = dh[k] * tc;
      const double d_c = dc[k] + dh[k] * o * (1.0 - tc * tc);
      const double d_i = d_c * g;
      const double d_g = d_c * i;
      const double d_f = d_c * trace.c_prev(t, k);
      dz_all(t, k) = d_i * i * (1.0 - i);
      dz_all(t, hid + k) = d_f * f * (1.0 - f);
      dz_all(t, 2 * hid + k) = d_g * (1.0 - g * g);
      dz_all(t, 3 * hid + k) = d_o * o * (1.0 - o);
      dc[k] = d_c * f;
    }
    dh = dz_all.row(t) * wh.transpose();
  }

  if (p.wx->requires_grad) grad_mat(*p.wx).noalias() += as_mat(x).transpose() * dz_all;
  if (p.wh->requires_grad) grad_mat(*p.wh).noalias() += trace.h_prev.transpose() * dz_all;
  if (p.b->requires_grad) {
    p.b->ensure_grad();
    VecMap(p.b->grad.data(), 4 * hid) += dz_all.colwise().sum().transpose();
  }
  if (grad_x_acc != nullptr) grad_x_acc->noalias() += dz_all * as_mat(*p.wx).transpose();
}

}  // namespace detail

// Bidirectional LSTM over a sequence x [N x I] -> [N x 2H]: forward-pass
// hidden states in columns [0, H), backward-pass states in [H, 2H). One
// fused tape node; the whole-sequence recurrence and its BPTT live here so
// graphs stay small on long sequences.
inline Var bilstm_layer(const Var& x, const LstmDirParams& fwd, const LstmDirParams& bwd) {
  if (x->shape.size() != 2) throw std::invalid_argument("bilstm_layer: 2-D input required");
  if (fwd.wx->shape[0] != x->shape[1] || bwd.wx->shape[0] != x->shape[1])
    throw std::invalid_argument("bilstm_layer: input width mismatch " +
                                shape_str(x->shape) + " vs wx " + shape_str(fwd.wx->shape));
  const std::int64_t n = x->shape[0];
  const std::int64_t hid = fwd.hidden();

  auto tr_f = std::make_shared<detail::LstmTrace>();
  auto tr_b = std::make_shared<detail::LstmTrace>();
  Mat h_f, h_b;
  detail::lstm_run_direction(*x, fwd, false, *tr_f, h_f);
  detail::lstm_run_direction(*x, bwd, true, *tr_b, h_b);

  auto out = detail::make_op(
      {n, 2 * hid}, {x, fwd.wx, fwd.wh, fwd.b, bwd.wx, bwd.wh, bwd.b},
      [x, fwd, bwd, tr_f, tr_b, n, hid](TensorData& o) {
        ConstMatMap go(o.grad.data(), n, 2 * hid);
        const Mat gh_f = go.leftCols(hid);
        const Mat gh_b = go.rightCols(hid);
        Mat gx = Mat::Zero(n, x->shape[1]);
        detail::lstm_backprop_direction(*x, fwd, false, *tr_f, gh_f,
                                        x->requires_grad ? &gx : nullptr);
        detail::lstm_backprop_direction(*x, bwd, true, *tr_b, gh_b,
                                        x->requires_grad ? &gx : nullptr);
        if (x->requires_grad) grad_mat(*x).noalias() += gx;
      });
  MatMap out_map(out->value.data(), n, 2 * hid);
  out_map.leftCols(hid) = h_f;
  out_map.rightCols(hid) = h_b;
  return out;
}

}  // namespace mrx::nn

#endif  // MRX_NN_RECURRENT_HPP
