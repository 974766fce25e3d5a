// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Synthetic clip pools with production-like duration distributions:
// music clips tens of seconds, speech utterances several seconds, short
// foreground effects and long background beds.

#ifndef MRX_TESTS_SUPPORT_FIXTURES_HPP
#define MRX_TESTS_SUPPORT_FIXTURES_HPP

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "mrx/loudness.hpp"
#include "mrx/mixgen.hpp"
#include "mrx/rng.hpp"
#include "mrx/wav_io.hpp"
#include "support/synth.hpp"

namespace mrx::testsupport {

namespace fs = std::filesystem;

inline AudioBuffer fixture_clip(SourceClass cls, double duration_s, int rate,
                                std::uint64_t seed) {
  Rng rng(seed);
  switch (cls) {
    case SourceClass::music: {
      // Low harmonic stack with slow tremolo.
      auto a = sine(110.0 + 10.0 * rng.uniform(), duration_s, rate, 0.28);
      const auto b = sine(220.0 + 8.0 * rng.uniform(), duration_s, rate, 0.22);
      const auto c = sine(330.0 + 6.0 * rng.uniform(), duration_s, rate, 0.18);
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double trem = 0.8 + 0.2 * std::sin(2.0 * M_PI * 0.5 * i / rate);
        a.samples[i] = trem * (a.samples[i] + b.samples[i] + c.samples[i]);
      }
      return a;
    }
    case SourceClass::speech:
      return pulse_train(3.0 + rng.uniform(), 1200.0 + 600.0 * rng.uniform(), duration_s,
                         rate, 0.5);
    case SourceClass::sfx_fg: {
      auto n = white_noise(duration_s, rate, 0.4, seed ^ 0x5f5f);
      // Burst envelope so foreground effects read as discrete events.
      for (std::size_t i = 0; i < n.size(); ++i) {
        const double t = static_cast<double>(i) / rate;
        n.samples[i] *= 0.3 + 0.7 * std::abs(std::sin(2.0 * M_PI * 0.7 * t));
      }
      return n;
    }
    case SourceClass::sfx_bg: {
      // Smoothed noise bed (one-pole lowpass).
      auto n = white_noise(duration_s, rate, 0.5, seed ^ 0xa0a0);
      double state = 0.0;
      for (double& v : n.samples) {
        state = 0.95 * state + 0.05 * v;
        v = state * 8.0;
      }
      return n;
    }
  }
  return {};
}

struct FixturePool {
  ClipPool pool;
  fs::path dir;
};

// Writes a deterministic clip pool under dir. Durations mimic the real
// corpora: long music/background clips, mid-length utterances, short
// foreground events.
inline FixturePool make_fixture_pool(const fs::path& dir, int rate, std::uint64_t seed,
                                     const std::vector<std::string>& splits = {"train"}) {
  fs::create_directories(dir);
  FixturePool out;
  out.dir = dir;
  Rng rng(seed);

  const struct {
    SourceClass cls;
    int count;
    double min_s, max_s;
  } plans[] = {
      {SourceClass::music, 4, 18.0, 28.0},
      {SourceClass::speech, 6, 6.0, 14.0},
      {SourceClass::sfx_fg, 6, 2.0, 8.0},
      {SourceClass::sfx_bg, 4, 15.0, 25.0},
  };

  int file_id = 0;
  for (const auto& split : splits) {
    for (const auto& plan : plans) {
      for (int i = 0; i < plan.count; ++i) {
        const double dur = rng.uniform(plan.min_s, plan.max_s);
        const auto clip = fixture_clip(plan.cls, dur, rate, seed + 1000 + file_id);
        const std::string name = std::string(class_name(plan.cls)) + "_" + split + "_" +
                                 std::to_string(i) + ".wav";
        const fs::path path = dir / name;
        write_wav(path.string(), clip, WavEncoding::float32);
        ClipEntry entry;
        entry.path = path.string();
        entry.duration_s = clip.duration_s();
        if (plan.cls == SourceClass::speech)
          entry.metadata = {{"transcript", "fixture utterance " + std::to_string(file_id)}};
        out.pool.splits[split][plan.cls].push_back(std::move(entry));
        ++file_id;
      }
    }
  }
  return out;
}

// One synthetic supervised example: sweep "music", pulse-train "speech",
// band-limited-noise "sfx", each leveled to the production loudness
// targets, mixed by plain summation.
struct ToyMixture {
  AudioBuffer mixture;
  std::array<AudioBuffer, 3> stems;
};

inline AudioBuffer leveled_to_lufs(AudioBuffer b, double target_lufs) {
  const auto measured = integrated_lufs(b);
  if (measured.has_value()) b = apply_gain_db(b, target_lufs - *measured);
  return b;
}

inline ToyMixture make_toy_mixture(int rate, double duration_s, std::uint64_t seed = 7) {
  ToyMixture out;
  out.stems[0] =
      leveled_to_lufs(sweep(80.0, rate * 0.45, duration_s, rate, 0.5), -24.0);
  out.stems[1] = leveled_to_lufs(pulse_train(3.0, 1100.0, duration_s, rate, 0.6), -17.0);
  AudioBuffer noise = white_noise(duration_s, rate, 0.4, seed);
  double state = 0.0;  // one-pole band shaping
  for (double& v : noise.samples) {
    const double next = 0.6 * state + 0.4 * v;
    v = next - state;
    state = next;
  }
  out.stems[2] = leveled_to_lufs(std::move(noise), -21.0);
  out.mixture.sample_rate = rate;
  out.mixture.samples.assign(out.stems[0].size(), 0.0);
  for (std::size_t i = 0; i < out.mixture.size(); ++i)
    out.mixture.samples[i] =
        out.stems[0].samples[i] + out.stems[1].samples[i] + out.stems[2].samples[i];
  return out;
}

}  // namespace mrx::testsupport

#endif  // MRX_TESTS_SUPPORT_FIXTURES_HPP
