// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Minimal dense-tensor reverse-mode autodiff. Nodes form a DAG; backward()
// topologically orders the reachable graph and visits each node exactly
// once in reverse creation order. Eigen maps provide the dense kernels;
// everything else is explicit.

#ifndef MRX_NN_TENSOR_HPP
#define MRX_NN_TENSOR_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace mrx::nn {

using Shape = std::vector<std::int64_t>;

inline std::int64_t numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::int64_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out + "]";
}

struct TensorData;
using Var = std::shared_ptr<TensorData>;

// One value in the graph. `grad` is lazily sized; `backward_fn` scatters
// this node's gradient into its parents.
struct TensorData {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(TensorData&)> backward_fn;

  std::int64_t rows() const { return shape.size() == 2 ? shape[0] : 1; }
  std::int64_t cols() const { return shape.size() == 2 ? shape[1] : shape.at(0); }
  std::int64_t size() const { return static_cast<std::int64_t>(value.size()); }

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
  void zero_grad() { grad.assign(value.size(), 0.0); }
};

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

inline ConstMatMap as_mat(const TensorData& t) {
  return ConstMatMap(t.value.data(), t.rows(), t.cols());
}
inline MatMap grad_mat(TensorData& t) {
  t.ensure_grad();
  return MatMap(t.grad.data(), t.rows(), t.cols());
}

inline Var make_tensor(Shape shape, bool requires_grad = false) {
  auto v = std::make_shared<TensorData>();
  v->shape = std::move(shape);
  v->value.assign(static_cast<std::size_t>(numel(v->shape)), 0.0);
  v->requires_grad = requires_grad;
  return v;
}

inline Var make_tensor(Shape shape, std::vector<double> data, bool requires_grad = false) {
  auto v = std::make_shared<TensorData>();
  v->shape = std::move(shape);
  if (static_cast<std::int64_t>(data.size()) != numel(v->shape))
    throw std::invalid_argument("make_tensor: data size does not match shape " +
                                shape_str(v->shape));
  v->value = std::move(data);
  v->requires_grad = requires_grad;
  return v;
}

namespace detail {

inline void check_same_shape(const char* op, const TensorData& a, const TensorData& b) {
  if (a.shape != b.shape)
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape) +
                                " vs " + shape_str(b.shape));
}

inline Var make_op(Shape shape, std::vector<Var> parents,
                   std::function<void(TensorData&)> backward) {
  auto out = make_tensor(std::move(shape));
  out->requires_grad =
      std::any_of(parents.begin(), parents.end(), [](const Var& p) { return p->requires_grad; });
  if (out->requires_grad) {
    out->parents = std::move(parents);
    out->backward_fn = std::move(backward);
  }
  return out;
}

}  // namespace detail

// C = A * B for 2-D operands.
inline Var matmul(const Var& a, const Var& b) {
  if (a->shape.size() != 2 || b->shape.size() != 2 || a->shape[1] != b->shape[0])
    throw std::invalid_argument("matmul: incompatible shapes " + shape_str(a->shape) +
                                " vs " + shape_str(b->shape));
  auto out = detail::make_op({a->shape[0], b->shape[1]}, {a, b}, [a, b](TensorData& o) {
    ConstMatMap go(o.grad.data(), o.rows(), o.cols());
    if (a->requires_grad) grad_mat(*a).noalias() += go * as_mat(*b).transpose();
    if (b->requires_grad) grad_mat(*b).noalias() += as_mat(*a).transpose() * go;
  });
  MatMap(out->value.data(), out->rows(), out->cols()).noalias() = as_mat(*a) * as_mat(*b);
  return out;
}

inline Var add(const Var& a, const Var& b) {
  detail::check_same_shape("add", *a, *b);
  auto out = detail::make_op(a->shape, {a, b}, [a, b](TensorData& o) {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) a->grad[i] += o.grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) b->grad[i] += o.grad[i];
    }
  });
  for (std::size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = a->value[i] + b->value[i];
  return out;
}

// x [N x F] + row vector b [F], broadcast over rows.
inline Var add_rowvec(const Var& x, const Var& b) {
  if (x->shape.size() != 2 || b->shape.size() != 1 || x->shape[1] != b->shape[0])
    throw std::invalid_argument("add_rowvec: shapes " + shape_str(x->shape) + " vs " +
                                shape_str(b->shape));
  auto out = detail::make_op(x->shape, {x, b}, [x, b](TensorData& o) {
    const auto cols = static_cast<std::size_t>(o.cols());
    if (x->requires_grad) {
      x->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) x->grad[i] += o.grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) b->grad[i % cols] += o.grad[i];
    }
  });
  const auto cols = static_cast<std::size_t>(x->cols());
  for (std::size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = x->value[i] + b->value[i % cols];
  return out;
}

inline Var mul(const Var& a, const Var& b) {
  detail::check_same_shape("mul", *a, *b);
  auto out = detail::make_op(a->shape, {a, b}, [a, b](TensorData& o) {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) a->grad[i] += o.grad[i] * b->value[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) b->grad[i] += o.grad[i] * a->value[i];
    }
  });
  for (std::size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = a->value[i] * b->value[i];
  return out;
}

inline Var scale(const Var& a, double c) {
  auto out = detail::make_op(a->shape, {a}, [a, c](TensorData& o) {
    a->ensure_grad();
    for (std::size_t i = 0; i < o.grad.size(); ++i) a->grad[i] += c * o.grad[i];
  });
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = c * a->value[i];
  return out;
}

inline Var relu(const Var& a) {
  auto out = detail::make_op(a->shape, {a}, [a](TensorData& o) {
    a->ensure_grad();
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      if (o.value[i] > 0.0) a->grad[i] += o.grad[i];
  });
  for (std::size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = a->value[i] > 0.0 ? a->value[i] : 0.0;
  return out;
}

inline Var tanh_op(const Var& a) {
  auto out = detail::make_op(a->shape, {a}, [a](TensorData& o) {
    a->ensure_grad();
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      a->grad[i] += o.grad[i] * (1.0 - o.value[i] * o.value[i]);
  });
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = std::tanh(a->value[i]);
  return out;
}

inline Var sigmoid(const Var& a) {
  auto out = detail::make_op(a->shape, {a}, [a](TensorData& o) {
    a->ensure_grad();
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      a->grad[i] += o.grad[i] * o.value[i] * (1.0 - o.value[i]);
  });
  for (std::size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = 1.0 / (1.0 + std::exp(-a->value[i]));
  return out;
}

// Elementwise mean of same-shaped tensors (the parameter-less averaging
// bridge between branches).
inline Var mean_over(const std::vector<Var>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_over: empty list");
  for (const Var& x : xs) detail::check_same_shape("mean_over", *xs[0], *x);
  const double inv = 1.0 / static_cast<double>(xs.size());
  auto out = detail::make_op(xs[0]->shape, xs, [xs, inv](TensorData& o) {
    for (const Var& x : xs) {
      if (!x->requires_grad) continue;
      x->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) x->grad[i] += inv * o.grad[i];
    }
  });
  for (const Var& x : xs)
    for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] += inv * x->value[i];
  return out;
}

// Concatenate 2-D tensors along axis 1 (features) or 0 (rows).
inline Var concat(const Var& a, const Var& b, int axis = 1) {
  if (a->shape.size() != 2 || b->shape.size() != 2)
    throw std::invalid_argument("concat: 2-D tensors required");
  if (axis != 0 && axis != 1) throw std::invalid_argument("concat: axis must be 0 or 1");
  const std::int64_t keep = axis == 1 ? 0 : 1;
  if (a->shape[keep] != b->shape[keep])
    throw std::invalid_argument("concat: shape mismatch " + shape_str(a->shape) + " vs " +
                                shape_str(b->shape));
  Shape out_shape = a->shape;
  out_shape[axis] += b->shape[axis];

  auto out = detail::make_op(out_shape, {a, b}, [a, b, axis](TensorData& o) {
    if (axis == 1) {
      const auto ca = a->shape[1], cb = b->shape[1];
      for (std::int64_t r = 0; r < o.rows(); ++r) {
        if (a->requires_grad) {
          a->ensure_grad();
          for (std::int64_t c = 0; c < ca; ++c)
            a->grad[r * ca + c] += o.grad[r * (ca + cb) + c];
        }
        if (b->requires_grad) {
          b->ensure_grad();
          for (std::int64_t c = 0; c < cb; ++c)
            b->grad[r * cb + c] += o.grad[r * (ca + cb) + ca + c];
        }
      }
    } else {
      if (a->requires_grad) {
        a->ensure_grad();
        for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += o.grad[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (std::size_t i = 0; i < b->grad.size(); ++i)
          b->grad[i] += o.grad[a->value.size() + i];
      }
    }
  });
  if (axis == 1) {
    const auto ca = a->shape[1], cb = b->shape[1];
    for (std::int64_t r = 0; r < out->rows(); ++r) {
      for (std::int64_t c = 0; c < ca; ++c)
        out->value[r * (ca + cb) + c] = a->value[r * ca + c];
      for (std::int64_t c = 0; c < cb; ++c)
        out->value[r * (ca + cb) + ca + c] = b->value[r * cb + c];
    }
  } else {
    std::copy(a->value.begin(), a->value.end(), out->value.begin());
    std::copy(b->value.begin(), b->value.end(), out->value.begin() + a->value.size());
  }
  return out;
}

// Column slice [c0, c1) of a 2-D tensor.
inline Var slice_cols(const Var& a, std::int64_t c0, std::int64_t c1) {
  if (a->shape.size() != 2 || c0 < 0 || c1 <= c0 || c1 > a->shape[1])
    throw std::invalid_argument("slice_cols: bad range for shape " + shape_str(a->shape));
  const std::int64_t width = c1 - c0, full = a->shape[1];
  auto out = detail::make_op({a->shape[0], width}, {a}, [a, c0, width, full](TensorData& o) {
    a->ensure_grad();
    for (std::int64_t r = 0; r < o.rows(); ++r)
      for (std::int64_t c = 0; c < width; ++c)
        a->grad[r * full + c0 + c] += o.grad[r * width + c];
  });
  for (std::int64_t r = 0; r < out->rows(); ++r)
    for (std::int64_t c = 0; c < width; ++c)
      out->value[r * width + c] = a->value[r * full + c0 + c];
  return out;
}

inline Var sum(const Var& a) {
  auto out = detail::make_op({1}, {a}, [a](TensorData& o) {
    a->ensure_grad();
    for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += o.grad[0];
  });
  out->value[0] = std::accumulate(a->value.begin(), a->value.end(), 0.0);
  return out;
}

// Batch normalization over axis 0 (all rows, i.e. batch x time) per
// feature. Training mode normalizes with batch statistics and refreshes the
// running estimates; eval mode is the running-statistics affine map.
struct BatchNormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

inline Var batchnorm(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state,
                     bool train) {
  if (x->shape.size() != 2) throw std::invalid_argument("batchnorm: 2-D input required");
  const auto n = x->shape[0];
  const auto f = x->shape[1];
  if (gamma->shape != Shape{f} || beta->shape != Shape{f})
    throw std::invalid_argument("batchnorm: parameter shape mismatch");
  if (static_cast<std::int64_t>(state.running_mean.size()) != f) {
    state.running_mean.assign(f, 0.0);
    state.running_var.assign(f, 1.0);
  }

  auto mean = std::make_shared<std::vector<double>>(f, 0.0);
  auto inv_std = std::make_shared<std::vector<double>>(f, 0.0);
  if (train) {
    std::vector<double> var(f, 0.0);
    for (std::int64_t r = 0; r < n; ++r)
      for (std::int64_t c = 0; c < f; ++c) (*mean)[c] += x->value[r * f + c];
    for (std::int64_t c = 0; c < f; ++c) (*mean)[c] /= static_cast<double>(n);
    for (std::int64_t r = 0; r < n; ++r)
      for (std::int64_t c = 0; c < f; ++c) {
        const double d = x->value[r * f + c] - (*mean)[c];
        var[c] += d * d;
      }
    for (std::int64_t c = 0; c < f; ++c) {
      var[c] /= static_cast<double>(n);
      (*inv_std)[c] = 1.0 / std::sqrt(var[c] + state.eps);
      state.running_mean[c] =
          (1.0 - state.momentum) * state.running_mean[c] + state.momentum * (*mean)[c];
      state.running_var[c] =
          (1.0 - state.momentum) * state.running_var[c] + state.momentum * var[c];
    }
  } else {
    for (std::int64_t c = 0; c < f; ++c) {
      (*mean)[c] = state.running_mean[c];
      (*inv_std)[c] = 1.0 / std::sqrt(state.running_var[c] + state.eps);
    }
  }

  auto out = detail::make_op(
      x->shape, {x, gamma, beta},
      [x, gamma, beta, mean, inv_std, n, f, train](TensorData& o) {
        if (gamma->requires_grad || beta->requires_grad) {
          gamma->ensure_grad();
          beta->ensure_grad();
          for (std::int64_t r = 0; r < n; ++r)
            for (std::int64_t c = 0; c < f; ++c) {
              const double xhat =
                  (x->value[r * f + c] - (*mean)[c]) * (*inv_std)[c];
              gamma->grad[c] += o.grad[r * f + c] * xhat;
              beta->grad[c] += o.grad[r * f + c];
            }
        }
        if (!x->requires_grad) return;
        x->ensure_grad();
        if (!train) {
          for (std::int64_t r = 0; r < n; ++r)
            for (std::int64_t c = 0; c < f; ++c)
              x->grad[r * f + c] += o.grad[r * f + c] * gamma->value[c] * (*inv_std)[c];
          return;
        }
        // Train mode: gradient through the batch statistics.
        for (std::int64_t c = 0; c < f; ++c) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (std::int64_t r = 0; r < n; ++r) {
            const double dy = o.grad[r * f + c] * gamma->value[c];
            const double xhat = (x->value[r * f + c] - (*mean)[c]) * (*inv_std)[c];
            sum_dy += dy;
            sum_dy_xhat += dy * xhat;
          }
          const double inv_n = 1.0 / static_cast<double>(n);
          for (std::int64_t r = 0; r < n; ++r) {
            const double dy = o.grad[r * f + c] * gamma->value[c];
            const double xhat = (x->value[r * f + c] - (*mean)[c]) * (*inv_std)[c];
            x->grad[r * f + c] +=
                (*inv_std)[c] * (dy - inv_n * sum_dy - xhat * inv_n * sum_dy_xhat);
          }
        }
      });
  for (std::int64_t r = 0; r < n; ++r)
    for (std::int64_t c = 0; c < f; ++c) {
      const double xhat = (x->value[r * f + c] - (*mean)[c]) * (*inv_std)[c];
      out->value[r * f + c] = gamma->value[c] * xhat + beta->value[c];
    }
  return out;
}

// Reverse-mode sweep from a scalar loss. Topological order by iterative
// DFS; each node's backward_fn runs exactly once, in reverse order.
inline void backward(const Var& loss) {
  if (loss->size() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                shape_str(loss->shape));
  std::vector<TensorData*> order;
  std::vector<std::pair<TensorData*, std::size_t>> stack;
  std::unordered_set<const TensorData*> visited;
  stack.push_back({loss.get(), 0});
  visited.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorData* parent = node->parents[next++].get();
      if (visited.insert(parent).second) stack.push_back({parent, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss->ensure_grad();
  loss->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorData* node = *it;
    if (node->backward_fn && node->requires_grad) {
      node->ensure_grad();
      node->backward_fn(*node);
    }
  }
}

}  // namespace mrx::nn

#endif  // MRX_NN_TENSOR_HPP
