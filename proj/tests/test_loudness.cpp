// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "mrx/loudness.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mrx/audio.hpp"
#include "support/synth.hpp"

namespace {

TEST(Lufs, CalibrationSine997) {
  // BS.1770 calibration: a 997 Hz full-scale sine reads -3.01 LUFS. The
  // independent route: -0.691 + 10*log10(1/2) + K-gain(997 Hz), where the
  // filter gain comes straight from the biquad coefficients.
  const auto sine = mrx::testsupport::sine(997.0, 10.0, 48000, 1.0);
  const auto measured = mrx::integrated_lufs(sine);
  ASSERT_TRUE(measured.has_value());
  EXPECT_NEAR(*measured, -3.01, 0.1);

  const double direct =
      -0.691 + 10.0 * std::log10(0.5) + mrx::k_weighting_gain_db(997.0, 48000.0);
  EXPECT_NEAR(*measured, direct, 0.02);
  // The K-weighting gain at 997 Hz cancels the -0.691 offset.
  EXPECT_NEAR(mrx::k_weighting_gain_db(997.0, 48000.0), 0.691, 0.05);
}

TEST(Lufs, CalibrationHoldsAcrossRates) {
  for (int rate : {16000, 44100, 48000}) {
    const auto sine = mrx::testsupport::sine(997.0, 5.0, rate, 1.0);
    const auto measured = mrx::integrated_lufs(sine);
    ASSERT_TRUE(measured.has_value());
    EXPECT_NEAR(*measured, -3.01, 0.1) << "rate " << rate;
  }
}

TEST(Lufs, PublishedCoefficientsAt48k) {
  // The bilinear redesign must land on the BS.1770 table at 48 kHz.
  const auto shelf = mrx::detail::k_shelf(48000.0);
  EXPECT_NEAR(shelf.b0, 1.53512485958697, 1e-6);
  EXPECT_NEAR(shelf.b1, -2.69169618940638, 1e-6);
  EXPECT_NEAR(shelf.b2, 1.19839281085285, 1e-6);
  EXPECT_NEAR(shelf.a1, -1.69065929318241, 1e-6);
  EXPECT_NEAR(shelf.a2, 0.73248077421585, 1e-6);
  const auto hp = mrx::detail::k_highpass(48000.0);
  EXPECT_NEAR(hp.a1, -1.99004745483398, 1e-5);
  EXPECT_NEAR(hp.a2, 0.99007225036621, 1e-5);
}

TEST(Lufs, GainShiftsLoudnessLinearly) {
  const auto noise = mrx::testsupport::white_noise(5.0, 48000, 0.25, 77);
  const auto base = mrx::integrated_lufs(noise);
  ASSERT_TRUE(base.has_value());
  for (double g : {6.0, -6.0, 3.5}) {
    const auto shifted = mrx::integrated_lufs(mrx::apply_gain_db(noise, g));
    ASSERT_TRUE(shifted.has_value());
    EXPECT_NEAR(*shifted - *base, g, 0.01) << "gain " << g;
  }
}

TEST(Lufs, SilenceUnmeasurable) {
  mrx::AudioBuffer silent;
  silent.sample_rate = 48000;
  silent.samples.assign(48000, 0.0);
  EXPECT_FALSE(mrx::integrated_lufs(silent).has_value());
}

TEST(Lufs, TooShortThrows) {
  mrx::AudioBuffer b;
  b.sample_rate = 48000;
  b.samples.assign(4800, 0.1);  // 100 ms
  EXPECT_THROW(mrx::integrated_lufs(b), mrx::ValidationError);
}

TEST(Lufs, TimeReversalInvariant) {
  auto noise = mrx::testsupport::white_noise(4.0, 44100, 0.3, 5);
  const auto fwd = mrx::integrated_lufs(noise);
  std::reverse(noise.samples.begin(), noise.samples.end());
  const auto rev = mrx::integrated_lufs(noise);
  ASSERT_TRUE(fwd.has_value() && rev.has_value());
  EXPECT_NEAR(*fwd, *rev, 0.05);
}

TEST(Lufs, WholeBlockShiftInvariant) {
  const int rate = 48000;
  auto noise = mrx::testsupport::white_noise(4.0, rate, 0.3, 6);
  const auto base = mrx::integrated_lufs(noise);
  // Prepend exactly one 400 ms block of copies of the first block.
  mrx::AudioBuffer shifted;
  shifted.sample_rate = rate;
  const std::size_t block = static_cast<std::size_t>(0.4 * rate);
  shifted.samples.assign(noise.samples.begin(), noise.samples.begin() + block);
  shifted.samples.insert(shifted.samples.end(), noise.samples.begin(), noise.samples.end());
  const auto moved = mrx::integrated_lufs(shifted);
  ASSERT_TRUE(base.has_value() && moved.has_value());
  EXPECT_NEAR(*base, *moved, 0.05);
}

TEST(Lufs, GatingIgnoresLongSilence) {
  // Loud noise followed by digital silence: gating keeps the reading near
  // the loud part instead of averaging the silence in.
  const int rate = 48000;
  auto noise = mrx::testsupport::white_noise(2.0, rate, 0.25, 8);
  const auto loud = mrx::integrated_lufs(noise);
  auto padded = noise;
  padded.samples.resize(noise.samples.size() * 4, 0.0);
  const auto gated = mrx::integrated_lufs(padded);
  ASSERT_TRUE(loud.has_value() && gated.has_value());
  // Boundary blocks straddling the edge legitimately pass the relative
  // gate; without gating the reading would drop by ~6 dB here.
  EXPECT_NEAR(*gated, *loud, 0.5);
}

}  // namespace
