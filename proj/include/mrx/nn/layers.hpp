// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef MRX_NN_LAYERS_HPP
#define MRX_NN_LAYERS_HPP

#include <cmath>
#include <string>
#include <vector>

#include "mrx/nn/recurrent.hpp"
#include "mrx/nn/tensor.hpp"
#include "mrx/rng.hpp"

namespace mrx::nn {

inline void init_uniform(TensorData& t, double bound, Rng& rng) {
  for (double& v : t.value) v = rng.uniform(-bound, bound);
}

// Fully connected layer, input-major weights: y = x W + b with W [in x out].
struct Linear {
  Var weight;
  Var bias;  // null when the layer feeds a batch norm

  static Linear create(std::int64_t in, std::int64_t out, bool with_bias, Rng& rng) {
    Linear l;
    l.weight = make_tensor({in, out}, true);
    init_uniform(*l.weight, 1.0 / std::sqrt(static_cast<double>(in)), rng);
    if (with_bias) {
      l.bias = make_tensor({out}, true);
      init_uniform(*l.bias, 1.0 / std::sqrt(static_cast<double>(in)), rng);
    }
    return l;
  }

  Var apply(const Var& x) const {
    Var y = matmul(x, weight);
    return bias ? add_rowvec(y, bias) : y;
  }
};

struct BatchNorm {
  Var gamma;
  Var beta;
  BatchNormState state;

  static BatchNorm create(std::int64_t features) {
    BatchNorm bn;
    bn.gamma = make_tensor({features}, std::vector<double>(features, 1.0), true);
    bn.beta = make_tensor({features}, true);
    bn.state.running_mean.assign(features, 0.0);
    bn.state.running_var.assign(features, 1.0);
    return bn;
  }

  Var apply(const Var& x, bool train) { return batchnorm(x, gamma, beta, state, train); }
};

// Uniform +-1/sqrt(fan_in) weights, forget-gate bias 1.
inline LstmDirParams make_lstm_dir(std::int64_t in, std::int64_t hidden, Rng& rng) {
  LstmDirParams p;
  p.wx = make_tensor({in, 4 * hidden}, true);
  p.wh = make_tensor({hidden, 4 * hidden}, true);
  p.b = make_tensor({4 * hidden}, true);
  init_uniform(*p.wx, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  init_uniform(*p.wh, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  for (std::int64_t k = hidden; k < 2 * hidden; ++k) p.b->value[k] = 1.0;
  return p;
}

struct BiLstm {
  LstmDirParams fwd, bwd;

  static BiLstm create(std::int64_t in, std::int64_t hidden, Rng& rng) {
    return {make_lstm_dir(in, hidden, rng), make_lstm_dir(in, hidden, rng)};
  }

  Var apply(const Var& x) const { return bilstm_layer(x, fwd, bwd); }
};

}  // namespace mrx::nn

#endif  // MRX_NN_LAYERS_HPP
