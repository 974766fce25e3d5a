// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef MRX_NN_OPTIM_HPP
#define MRX_NN_OPTIM_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mrx/nn/tensor.hpp"

namespace mrx::nn {

// Adam with bias correction over a fixed parameter list. Moment buffers
// are indexed by position, so the list order must not change between steps.
struct Adam {
  std::vector<Var> params;
  std::vector<std::vector<double>> m, v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;

  explicit Adam(std::vector<Var> parameters) : params(std::move(parameters)) {
    m.resize(params.size());
    v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i].assign(params[i]->value.size(), 0.0);
      v[i].assign(params[i]->value.size(), 0.0);
    }
  }

  void zero_grad() {
    for (auto& p : params) p->zero_grad();
  }

  void step(double lr) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      TensorData& p = *params[i];
      p.ensure_grad();
      for (std::size_t k = 0; k < p.value.size(); ++k) {
        const double g = p.grad[k];
        m[i][k] = beta1 * m[i][k] + (1.0 - beta1) * g;
        v[i][k] = beta2 * v[i][k] + (1.0 - beta2) * g * g;
        const double mhat = m[i][k] / bc1;
        const double vhat = v[i][k] / bc2;
        p.value[k] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }
};

// Plateau learning-rate schedule: halve when the validation loss has not
// strictly improved on the best seen for `patience` consecutive epochs;
// the patience counter resets after each halving.
struct PlateauScheduler {
  double lr = 1e-3;
  int patience = 3;
  double factor = 0.5;
  double best = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;

  double on_epoch(double validation_loss) {
    if (validation_loss < best) {
      best = validation_loss;
      bad_epochs = 0;
    } else if (++bad_epochs >= patience) {
      lr *= factor;
      bad_epochs = 0;
    }
    return lr;
  }
};

}  // namespace mrx::nn

#endif  // MRX_NN_OPTIM_HPP
