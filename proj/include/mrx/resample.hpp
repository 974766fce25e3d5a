// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef MRX_RESAMPLE_HPP
#define MRX_RESAMPLE_HPP

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "mrx/audio.hpp"

namespace mrx {

namespace detail {

// Modified Bessel function of the first kind, order zero (power series).
inline double bessel_i0(double x) {
  double term = 1.0, sum = 1.0;
  const double half_sq = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= half_sq / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return sum;
}

}  // namespace detail

// Band-limited sample-rate conversion: polyphase windowed sinc, Kaiser
// beta = 8.6, 64 taps per phase at the limiting rate. Output length is
// round(len * target / source). Sample rates are integers, so the ratio is
// always rational and the phase table is exact and finite.
inline AudioBuffer resample(const AudioBuffer& in, int target_rate) {
  if (!valid_sample_rate(target_rate))
    throw ValidationError("resample: target_rate out of range [8000, 192000]");
  if (target_rate == in.sample_rate) return in;

  const std::size_t out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(in.size()) * target_rate / in.sample_rate));
  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples.assign(out_len, 0.0);
  if (in.empty() || out_len == 0) return out;

  const int g = std::gcd(in.sample_rate, target_rate);
  const std::int64_t up = target_rate / g;    // phases
  const std::int64_t down = in.sample_rate / g;

  // Anti-aliasing cutoff at the lower of the two Nyquist rates, with the
  // kernel widened accordingly so every phase keeps >= 64 taps.
  const double scale = std::min(1.0, static_cast<double>(target_rate) / in.sample_rate);
  const double half_width = 32.0 / scale;  // in input samples
  const int max_taps = static_cast<int>(2.0 * half_width) + 2;
  const double beta = 8.6;
  const double i0_beta = detail::bessel_i0(beta);

  const auto kernel = [&](double t) {
    const double r = t / half_width;
    if (r <= -1.0 || r >= 1.0) return 0.0;
    const double window = detail::bessel_i0(beta * std::sqrt(1.0 - r * r)) / i0_beta;
    const double x = M_PI * scale * t;
    const double sinc = std::abs(x) < 1e-12 ? 1.0 : std::sin(x) / x;
    return scale * sinc * window;
  };

  // One filter per output phase. Output n sits at input position
  // n * down / up = q + (phase / up) with q integer, so the fractional
  // offset cycles through `up` values.
  std::vector<std::vector<double>> phase_taps(static_cast<std::size_t>(up));
  std::vector<std::int64_t> phase_left(static_cast<std::size_t>(up));
  for (std::int64_t ph = 0; ph < up; ++ph) {
    const double frac = static_cast<double>(ph) / static_cast<double>(up);
    const std::int64_t left = static_cast<std::int64_t>(std::ceil(frac - half_width));
    auto& taps = phase_taps[static_cast<std::size_t>(ph)];
    taps.resize(max_taps, 0.0);
    for (int j = 0; j < max_taps; ++j) taps[j] = kernel(frac - static_cast<double>(left + j));
    phase_left[static_cast<std::size_t>(ph)] = left;
  }

  const std::int64_t len = static_cast<std::int64_t>(in.size());
  for (std::size_t n = 0; n < out_len; ++n) {
    const std::int64_t num = static_cast<std::int64_t>(n) * down;
    const std::int64_t q = num / up;
    const std::int64_t ph = num % up;
    const auto& taps = phase_taps[static_cast<std::size_t>(ph)];
    const std::int64_t left = q + phase_left[static_cast<std::size_t>(ph)];
    double acc = 0.0;
    const std::int64_t j0 = std::max<std::int64_t>(0, -left);
    const std::int64_t j1 = std::min<std::int64_t>(max_taps, len - left);
    for (std::int64_t j = j0; j < j1; ++j) acc += taps[j] * in.samples[left + j];
    out.samples[n] = acc;
  }
  return out;
}

}  // namespace mrx

#endif  // MRX_RESAMPLE_HPP
