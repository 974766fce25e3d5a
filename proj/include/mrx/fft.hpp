// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef MRX_FFT_HPP
#define MRX_FFT_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mrx {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT. sign = -1 forward, +1 inverse (inverse is
// unscaled; callers divide by n).
inline void fft_radix2(std::vector<std::complex<double>>& a, int sign) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n)) throw std::invalid_argument("fft_radix2: size must be a power of 2");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// One-sided spectrum of a real frame: n/2 + 1 bins, unnormalized forward DFT.
inline void rfft(const std::vector<double>& frame, std::vector<std::complex<double>>& spec,
                 std::vector<std::complex<double>>& scratch) {
  const std::size_t n = frame.size();
  scratch.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) scratch[i] = frame[i];
  fft_radix2(scratch, -1);
  spec.assign(n / 2 + 1, {});
  for (std::size_t f = 0; f <= n / 2; ++f) spec[f] = scratch[f];
}

// Real frame from a one-sided spectrum (Hermitian extension, 1/n scaling).
inline void irfft(const std::vector<std::complex<double>>& spec, std::size_t n,
                  std::vector<double>& frame, std::vector<std::complex<double>>& scratch) {
  if (spec.size() != n / 2 + 1) throw std::invalid_argument("irfft: spectrum/bin mismatch");
  scratch.assign(n, {});
  for (std::size_t f = 0; f <= n / 2; ++f) scratch[f] = spec[f];
  for (std::size_t f = 1; f < n / 2; ++f) scratch[n - f] = std::conj(spec[f]);
  fft_radix2(scratch, +1);
  frame.resize(n);
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) frame[i] = scratch[i].real() * inv;
}

}  // namespace mrx

#endif  // MRX_FFT_HPP
