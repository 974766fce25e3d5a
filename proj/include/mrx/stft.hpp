// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef MRX_STFT_HPP
#define MRX_STFT_HPP

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrx/audio.hpp"
#include "mrx/fft.hpp"

namespace mrx {

// Window size in samples for a window length given in milliseconds: the
// nearest power of 2, exact midpoints rounding up.
inline int quantize_window(double window_ms, int sample_rate) {
  if (!(window_ms > 0.0)) throw ValidationError("quantize_window: window_ms must be > 0");
  const double target = window_ms * sample_rate / 1000.0;
  if (target <= 1.0) return 1;
  std::int64_t lower = 1;
  while (static_cast<double>(lower * 2) <= target) lower *= 2;
  const std::int64_t upper = lower * 2;
  return static_cast<int>((target - static_cast<double>(lower)) >=
                                  (static_cast<double>(upper) - target)
                              ? upper
                              : lower);
}

struct StftConfig {
  double window_ms = 0.0;
  int window_samples = 0;
  int hop_samples = 0;
  int sample_rate = 0;

  static StftConfig from_ms(double window_ms, int sample_rate, int hop_samples = 0) {
    StftConfig c;
    c.window_ms = window_ms;
    c.sample_rate = sample_rate;
    c.window_samples = quantize_window(window_ms, sample_rate);
    c.hop_samples = hop_samples > 0 ? hop_samples : c.window_samples / 4;
    return c;
  }

  int bins() const { return window_samples / 2 + 1; }
};

// N frames x F bins, row-major. All resolutions sharing one hop produce the
// same N on the same input, which keeps multi-resolution branches aligned.
struct Spectrogram {
  StftConfig config;
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<std::complex<double>> data;

  std::complex<double>& at(std::size_t n, std::size_t f) { return data[n * bins + f]; }
  const std::complex<double>& at(std::size_t n, std::size_t f) const {
    return data[n * bins + f];
  }
};

namespace detail {

// Periodic sqrt-Hann. Used for both analysis and synthesis, so the product
// overlap-adds to a constant for any hop dividing the window.
inline std::vector<double> sqrt_hann(int length) {
  std::vector<double> w(length);
  for (int n = 0; n < length; ++n)
    w[n] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * M_PI * n / length));
  return w;
}

inline std::size_t frame_count(std::size_t samples, int hop) {
  return 1 + samples / static_cast<std::size_t>(hop);
}

// Overlap-added analysis*synthesis window power in padded coordinates.
inline std::vector<double> ola_denominator(std::size_t frames, const StftConfig& cfg) {
  const int L = cfg.window_samples;
  const auto w = sqrt_hann(L);
  std::vector<double> den((frames - 1) * cfg.hop_samples + L, 0.0);
  for (std::size_t k = 0; k < frames; ++k) {
    const std::size_t base = k * cfg.hop_samples;
    for (int n = 0; n < L; ++n) den[base + n] += w[n] * w[n];
  }
  return den;
}

}  // namespace detail

// STFT with sqrt-Hann analysis window and half-window center padding on
// both ends. N = 1 + floor(len / hop) independently of the window length.
inline Spectrogram stft(const AudioBuffer& buffer, const StftConfig& cfg) {
  const int L = cfg.window_samples;
  if (L <= 0 || !is_power_of_two(static_cast<std::size_t>(L)))
    throw ValidationError("stft: window_samples must be a positive power of 2");
  if (cfg.hop_samples <= 0 || cfg.hop_samples > L)
    throw ValidationError("stft: hop must be in [1, window]");
  if (buffer.empty()) throw ValidationError("stft: empty buffer");

  const std::size_t len = buffer.size();
  const std::size_t n_frames = detail::frame_count(len, cfg.hop_samples);
  const auto w = detail::sqrt_hann(L);

  Spectrogram out;
  out.config = cfg;
  out.frames = n_frames;
  out.bins = static_cast<std::size_t>(cfg.bins());
  out.data.resize(n_frames * out.bins);

  std::vector<double> frame(L);
  std::vector<std::complex<double>> spec, scratch;
  const std::int64_t half = L / 2;
  for (std::size_t k = 0; k < n_frames; ++k) {
    const std::int64_t start = static_cast<std::int64_t>(k) * cfg.hop_samples - half;
    for (int n = 0; n < L; ++n) {
      const std::int64_t idx = start + n;
      const double v =
          (idx >= 0 && idx < static_cast<std::int64_t>(len)) ? buffer.samples[idx] : 0.0;
      frame[n] = v * w[n];
    }
    rfft(frame, spec, scratch);
    for (std::size_t f = 0; f < out.bins; ++f) out.at(k, f) = spec[f];
  }
  return out;
}

// Weighted overlap-add inverse with sqrt-Hann synthesis window and exact
// window-power normalization. Output is truncated or zero-padded to `length`.
inline AudioBuffer istft(const Spectrogram& spec, std::size_t length) {
  const StftConfig& cfg = spec.config;
  const int L = cfg.window_samples;
  if (spec.bins != static_cast<std::size_t>(cfg.bins()))
    throw ValidationError("istft: spectrogram inconsistent with its config");
  const auto w = detail::sqrt_hann(L);
  const auto den = detail::ola_denominator(spec.frames, cfg);

  std::vector<double> acc(den.size(), 0.0);
  std::vector<double> frame;
  std::vector<std::complex<double>> bins_k(spec.bins), scratch;
  for (std::size_t k = 0; k < spec.frames; ++k) {
    for (std::size_t f = 0; f < spec.bins; ++f) bins_k[f] = spec.at(k, f);
    irfft(bins_k, static_cast<std::size_t>(L), frame, scratch);
    const std::size_t base = k * cfg.hop_samples;
    for (int n = 0; n < L; ++n) acc[base + n] += w[n] * frame[n];
  }

  AudioBuffer out;
  out.sample_rate = cfg.sample_rate;
  out.samples.assign(length, 0.0);
  const std::size_t half = static_cast<std::size_t>(L) / 2;
  for (std::size_t t = 0; t < length; ++t) {
    const std::size_t p = t + half;
    if (p < acc.size() && den[p] > 1e-12) out.samples[t] = acc[p] / den[p];
  }
  return out;
}

// Adjoint of the linear map S -> istft(S, length) at fixed frame count.
// Returns, per bin, the derivative of <istft(S), g> with respect to
// (Re S, Im S) packed as a complex value. Used by the autograd hook that
// backpropagates through mask application, and validated against the
// inner-product identity in the tests.
inline std::vector<std::complex<double>> istft_adjoint(const std::vector<double>& grad_out,
                                                       const StftConfig& cfg,
                                                       std::size_t n_frames) {
  const int L = cfg.window_samples;
  const std::size_t n_bins = static_cast<std::size_t>(cfg.bins());
  const auto w = detail::sqrt_hann(L);
  const auto den = detail::ola_denominator(n_frames, cfg);

  // Normalized gradient in padded coordinates.
  std::vector<double> g_pad(den.size(), 0.0);
  const std::size_t half = static_cast<std::size_t>(L) / 2;
  for (std::size_t t = 0; t < grad_out.size(); ++t) {
    const std::size_t p = t + half;
    if (p < g_pad.size() && den[p] > 1e-12) g_pad[p] = grad_out[t] / den[p];
  }

  std::vector<std::complex<double>> out(n_frames * n_bins);
  std::vector<double> u(L);
  std::vector<std::complex<double>> spec, scratch;
  const double inv_l = 1.0 / static_cast<double>(L);
  for (std::size_t k = 0; k < n_frames; ++k) {
    const std::size_t base = k * cfg.hop_samples;
    for (int n = 0; n < L; ++n) u[n] = w[n] * g_pad[base + n];
    rfft(u, spec, scratch);
    for (std::size_t f = 0; f < n_bins; ++f) {
      const double c = (f == 0 || f + 1 == n_bins) ? 1.0 : 2.0;
      out[k * n_bins + f] = spec[f] * (c * inv_l);
    }
  }
  return out;
}

}  // namespace mrx

#endif  // MRX_STFT_HPP
