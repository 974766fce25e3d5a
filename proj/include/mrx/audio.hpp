// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef MRX_AUDIO_HPP
#define MRX_AUDIO_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrx {

// Errors that map to distinct CLI exit codes: bad user input / bad file
// content vs. everything else.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mono sample sequence with nominal full scale [-1, 1]. Samples above full
// scale are representable; clipping only happens at pcm16 encoding time.
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 44100;

  AudioBuffer() = default;
  AudioBuffer(std::vector<double> s, int rate)
      : samples(std::move(s)), sample_rate(rate) {}

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

inline bool valid_sample_rate(int rate) { return rate >= 8000 && rate <= 192000; }

inline void check_buffer(const AudioBuffer& b) {
  if (!valid_sample_rate(b.sample_rate))
    throw ValidationError("sample_rate out of range [8000, 192000]: " +
                          std::to_string(b.sample_rate));
  for (double v : b.samples)
    if (!std::isfinite(v)) throw ValidationError("buffer contains non-finite sample");
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 20.0); }
inline double linear_to_db(double g) { return 20.0 * std::log10(g); }

// Sample-wise gain; no clipping is applied.
inline AudioBuffer apply_gain_db(const AudioBuffer& in, double gain_db) {
  const double g = db_to_linear(gain_db);
  AudioBuffer out = in;
  for (double& v : out.samples) v *= g;
  return out;
}

// Removes leading/trailing runs of 10 ms frames whose RMS is below
// threshold_db (dBFS, default -60). Interior content is untouched. A fully
// silent buffer trims to empty.
inline AudioBuffer trim_silence(const AudioBuffer& in, double threshold_db = -60.0) {
  if (!(threshold_db < 0.0))
    throw ValidationError("trim_silence: threshold_db must be negative");
  const std::size_t frame = std::max<std::size_t>(1, in.sample_rate / 100);
  const double thresh_ms = std::pow(db_to_linear(threshold_db), 2.0);

  const auto frame_loud = [&](std::size_t begin) {
    const std::size_t end = std::min(begin + frame, in.samples.size());
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += in.samples[i] * in.samples[i];
    return acc / static_cast<double>(end - begin) > thresh_ms;
  };

  std::size_t first = in.samples.size();
  for (std::size_t pos = 0; pos < in.samples.size(); pos += frame) {
    if (frame_loud(pos)) {
      first = pos;
      break;
    }
  }
  if (first == in.samples.size()) return AudioBuffer({}, in.sample_rate);

  std::size_t last = in.samples.size();
  for (std::size_t pos = (in.samples.size() - 1) / frame * frame;; pos -= frame) {
    if (frame_loud(pos)) {
      last = std::min(pos + frame, in.samples.size());
      break;
    }
    if (pos == 0) break;
  }
  return AudioBuffer(
      std::vector<double>(in.samples.begin() + first, in.samples.begin() + last),
      in.sample_rate);
}

}  // namespace mrx

#endif  // MRX_AUDIO_HPP
