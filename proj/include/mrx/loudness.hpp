// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef MRX_LOUDNESS_HPP
#define MRX_LOUDNESS_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "mrx/audio.hpp"

namespace mrx {

struct Biquad {
  double b0, b1, b2, a1, a2;

  void process(std::vector<double>& x) const {
    double z1 = 0.0, z2 = 0.0;
    for (double& v : x) {
      const double in = v;
      const double out = b0 * in + z1;
      z1 = b1 * in - a1 * out + z2;
      z2 = b2 * in - a2 * out;
      v = out;
    }
  }

  // Magnitude response at frequency f (Hz) for sample rate fs.
  double magnitude_at(double f, double fs) const {
    const double w = 2.0 * M_PI * f / fs;
    const std::complex<double> z = std::polar(1.0, -w);
    const std::complex<double> num = b0 + b1 * z + b2 * z * z;
    const std::complex<double> den = 1.0 + a1 * z + a2 * z * z;
    return std::abs(num / den);
  }
};

namespace detail {

// K-weighting stage 1: the spectral shaping shelf. Bilinear redesign from
// the analog prototype behind the BS.1770 coefficient table; at 48 kHz it
// reproduces the published coefficients to ~1e-10 and stays valid at any
// other rate.
inline Biquad k_shelf(double fs) {
  const double f0 = 1681.9744509555319;
  const double gain_db = 3.999843853973347;
  const double q = 0.7071752369554196;
  const double k = std::tan(M_PI * f0 / fs);
  const double vh = std::pow(10.0, gain_db / 20.0);
  const double vb = std::pow(vh, 0.4996667741545416);
  const double a0 = 1.0 + k / q + k * k;
  Biquad f;
  f.b0 = (vh + vb * k / q + k * k) / a0;
  f.b1 = 2.0 * (k * k - vh) / a0;
  f.b2 = (vh - vb * k / q + k * k) / a0;
  f.a1 = 2.0 * (k * k - 1.0) / a0;
  f.a2 = (1.0 - k / q + k * k) / a0;
  return f;
}

// K-weighting stage 2: the RLB high-pass. The numerator is left at
// [1, -2, 1] exactly as in the published table.
inline Biquad k_highpass(double fs) {
  const double f0 = 38.13547087602444;
  const double q = 0.5003270373238773;
  const double k = std::tan(M_PI * f0 / fs);
  const double denom = 1.0 + k / q + k * k;
  Biquad f;
  f.b0 = 1.0;
  f.b1 = -2.0;
  f.b2 = 1.0;
  f.a1 = 2.0 * (k * k - 1.0) / denom;
  f.a2 = (1.0 - k / q + k * k) / denom;
  return f;
}

}  // namespace detail

// K-weighting gain (dB) at a frequency, exposed for calibration tests.
inline double k_weighting_gain_db(double f, double fs) {
  const double m =
      detail::k_shelf(fs).magnitude_at(f, fs) * detail::k_highpass(fs).magnitude_at(f, fs);
  return 20.0 * std::log10(m);
}

// Integrated loudness per ITU-R BS.1770-4, mono: K-weighting, 400 ms blocks
// with 75% overlap, -70 LUFS absolute gate, then a -10 LU relative gate.
// Returns nullopt when every block is gated away (e.g. digital silence).
inline std::optional<double> integrated_lufs(const AudioBuffer& buffer) {
  const std::size_t block = static_cast<std::size_t>(0.4 * buffer.sample_rate);
  const std::size_t step = static_cast<std::size_t>(0.1 * buffer.sample_rate);
  if (buffer.size() < block)
    throw ValidationError("integrated_lufs: input shorter than one 400 ms block");

  std::vector<double> x = buffer.samples;
  detail::k_shelf(buffer.sample_rate).process(x);
  detail::k_highpass(buffer.sample_rate).process(x);

  std::vector<double> block_power;
  for (std::size_t start = 0; start + block <= x.size(); start += step) {
    double acc = 0.0;
    for (std::size_t i = start; i < start + block; ++i) acc += x[i] * x[i];
    block_power.push_back(acc / static_cast<double>(block));
  }

  const auto loudness = [](double power) { return -0.691 + 10.0 * std::log10(power); };

  double sum = 0.0;
  std::size_t count = 0;
  for (double p : block_power) {
    if (p > 0.0 && loudness(p) > -70.0) {
      sum += p;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;

  const double relative_gate = loudness(sum / static_cast<double>(count)) - 10.0;
  sum = 0.0;
  count = 0;
  for (double p : block_power) {
    if (p > 0.0) {
      const double l = loudness(p);
      if (l > -70.0 && l > relative_gate) {
        sum += p;
        ++count;
      }
    }
  }
  if (count == 0) return std::nullopt;
  return loudness(sum / static_cast<double>(count));
}

}  // namespace mrx

#endif  // MRX_LOUDNESS_HPP
