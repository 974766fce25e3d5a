// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Bridges between the autodiff graph and the STFT domain: applying a
// learned magnitude mask to a fixed complex spectrogram and synthesizing
// time-domain audio, plus the SI-SDR training objective.

#ifndef MRX_NN_SIGNAL_OPS_HPP
#define MRX_NN_SIGNAL_OPS_HPP

#include <memory>
#include <vector>

#include "mrx/metrics.hpp"
#include "mrx/nn/tensor.hpp"
#include "mrx/stft.hpp"

namespace mrx::nn {

// x_hat = istft(mask .* Y) truncated to `length`. The spectrogram is a
// fixed input (the mixture encoding); gradients flow into the mask through
// the adjoint of the synthesis map.
inline Var mask_istft(const Var& mask, std::shared_ptr<const Spectrogram> spec,
                      std::size_t length) {
  if (mask->shape.size() != 2 ||
      mask->shape[0] != static_cast<std::int64_t>(spec->frames) ||
      mask->shape[1] != static_cast<std::int64_t>(spec->bins))
    throw std::invalid_argument("mask_istft: mask shape " + shape_str(mask->shape) +
                                " does not match spectrogram " +
                                std::to_string(spec->frames) + "x" +
                                std::to_string(spec->bins));

  Spectrogram masked;
  masked.config = spec->config;
  masked.frames = spec->frames;
  masked.bins = spec->bins;
  masked.data.resize(spec->data.size());
  for (std::size_t i = 0; i < spec->data.size(); ++i)
    masked.data[i] = spec->data[i] * mask->value[i];
  const AudioBuffer synth = istft(masked, length);

  auto out = detail::make_op(
      {static_cast<std::int64_t>(length)}, {mask}, [mask, spec](TensorData& o) {
        const auto adj = istft_adjoint(o.grad, spec->config, spec->frames);
        mask->ensure_grad();
        for (std::size_t i = 0; i < adj.size(); ++i)
          mask->grad[i] += adj[i].real() * spec->data[i].real() +
                           adj[i].imag() * spec->data[i].imag();
      });
  out->value = synth.samples;
  return out;
}

// SI-SDR in dB of a 1-D estimate against a fixed reference, as a scalar
// graph node. Returns the same value as metrics::si_sdr.
inline Var si_sdr_node(const Var& estimate, std::shared_ptr<const std::vector<double>> reference) {
  if (estimate->shape.size() != 1 ||
      estimate->value.size() != reference->size())
    throw std::invalid_argument("si_sdr_node: estimate/reference length mismatch");

  const std::size_t n = reference->size();
  double dot = 0.0, ref_energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += estimate->value[i] * (*reference)[i];
    ref_energy += (*reference)[i] * (*reference)[i];
  }
  if (!(ref_energy > kMetricEps))
    throw ValidationError("si_sdr_node: silent reference (use energy_db_node)");

  const double alpha = dot / ref_energy;
  const double target_energy = alpha * alpha * ref_energy;  // S
  double err_energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = alpha * (*reference)[i] - estimate->value[i];
    err_energy += d * d;
  }
  const double denom = err_energy + kMetricEps * target_energy;  // E

  auto out = detail::make_op(
      {1}, {estimate},
      [estimate, reference, dot, ref_energy, alpha, target_energy, denom](TensorData& o) {
        estimate->ensure_grad();
        if (target_energy <= 0.0) return;  // flat floor region
        const double k = 10.0 / std::log(10.0) * o.grad[0];
        // dS/de = 2 alpha x; dE/de = 2 (e - s) + eps dS/de, using the
        // orthogonality <s - e, x> = 0 of the projection residual.
        for (std::size_t i = 0; i < reference->size(); ++i) {
          const double x = (*reference)[i];
          const double s = alpha * x;
          const double ds = 2.0 * dot / ref_energy * x;
          const double de = 2.0 * (estimate->value[i] - s) + kMetricEps * ds;
          estimate->grad[i] += k * (ds / target_energy - de / denom);
        }
      });
  out->value[0] =
      target_energy <= 0.0 ? -80.0 : 10.0 * std::log10(target_energy / denom);
  return out;
}

// 10 log10(mean(e^2) + eps): the loss term for sources that are silent in
// the reference chunk, penalizing leaked energy.
inline Var energy_db_node(const Var& estimate) {
  if (estimate->shape.size() != 1)
    throw std::invalid_argument("energy_db_node: 1-D estimate required");
  const std::size_t n = estimate->value.size();
  double acc = 0.0;
  for (double v : estimate->value) acc += v * v;
  const double mean = n == 0 ? 0.0 : acc / static_cast<double>(n);

  auto out = detail::make_op({1}, {estimate}, [estimate, mean, n](TensorData& o) {
    estimate->ensure_grad();
    const double k =
        10.0 / std::log(10.0) * o.grad[0] / ((mean + kMetricEps) * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      estimate->grad[i] += k * 2.0 * estimate->value[i];
  });
  out->value[0] = 10.0 * std::log10(mean + kMetricEps);
  return out;
}

}  // namespace mrx::nn

#endif  // MRX_NN_SIGNAL_OPS_HPP
