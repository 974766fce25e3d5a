// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef MRX_METRICS_HPP
#define MRX_METRICS_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrx/audio.hpp"
#include "mrx/manifest.hpp"
#include "mrx/stft.hpp"

namespace mrx {

constexpr double kMetricEps = 1e-8;

constexpr std::array<const char*, 3> kStemNames = {"music", "speech", "sfx"};

// Scale-invariant SDR in dB. The epsilon term caps perfect estimates near
// +80 dB instead of diverging; a zero projection floors at -80 dB.
inline double si_sdr(std::span<const double> estimate, std::span<const double> reference) {
  if (estimate.size() != reference.size())
    throw ValidationError("si_sdr: estimate/reference length mismatch");
  double dot = 0.0, ref_energy = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    dot += estimate[i] * reference[i];
    ref_energy += reference[i] * reference[i];
  }
  if (!(ref_energy > kMetricEps))
    throw ValidationError("si_sdr: silent reference (route to pes instead)");
  const double alpha = dot / ref_energy;
  const double target_energy = alpha * alpha * ref_energy;
  if (target_energy <= 0.0) return -80.0;
  double err_energy = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = alpha * reference[i] - estimate[i];
    err_energy += d * d;
  }
  return 10.0 * std::log10(target_energy / (err_energy + kMetricEps * target_energy));
}

inline double si_sdr(const AudioBuffer& estimate, const AudioBuffer& reference) {
  return si_sdr(std::span<const double>(estimate.samples),
                std::span<const double>(reference.samples));
}

inline double si_sdr_improvement(std::span<const double> estimate,
                                 std::span<const double> reference,
                                 std::span<const double> mixture) {
  return si_sdr(estimate, reference) - si_sdr(mixture, reference);
}

// Predicted energy at silence: mean estimate power in dB, floored at -80 dB
// by the epsilon. More negative is better.
inline double pes(std::span<const double> estimate_segment) {
  double acc = 0.0;
  for (double v : estimate_segment) acc += v * v;
  const double mean = estimate_segment.empty() ? 0.0 : acc / estimate_segment.size();
  return 10.0 * std::log10(mean + kMetricEps);
}

// Activity of (music, speech, sfx) per segment: a class is active iff an
// event of that class intersects the segment AND the ground-truth stem has
// segment RMS above -60 dBFS. The energy guard keeps annotated-but-silent
// clip tails from counting as active.
inline std::vector<std::array<bool, 3>> segment_activity(
    const AnnotationManifest& manifest, const std::array<const AudioBuffer*, 3>& references,
    double segment_s = 1.0) {
  const int rate = manifest.sample_rate;
  const auto seg_len = static_cast<std::size_t>(std::llround(segment_s * rate));
  const auto n_segments =
      static_cast<std::size_t>(std::floor(manifest.duration_s / segment_s + 1e-9));
  const double rms_gate = std::pow(10.0, -60.0 / 10.0);  // power of -60 dBFS

  std::vector<std::array<bool, 3>> out(n_segments, {false, false, false});
  for (std::size_t k = 0; k < n_segments; ++k) {
    const double begin = static_cast<double>(k) * segment_s;
    const double end = begin + segment_s;
    std::array<bool, 3> annotated = {false, false, false};
    for (const Event& e : manifest.events) {
      if (e.onset_s < end && e.offset_s > begin) {
        switch (e.source_class) {
          case SourceClass::music: annotated[0] = true; break;
          case SourceClass::speech: annotated[1] = true; break;
          default: annotated[2] = true; break;
        }
      }
    }
    for (int j = 0; j < 3; ++j) {
      if (!annotated[j]) continue;
      const auto& stem = references[j]->samples;
      const std::size_t s0 = k * seg_len;
      const std::size_t s1 = std::min(s0 + seg_len, stem.size());
      double acc = 0.0;
      for (std::size_t i = s0; i < s1; ++i) acc += stem[i] * stem[i];
      const double mean_power = s1 > s0 ? acc / static_cast<double>(s1 - s0) : 0.0;
      out[k][j] = mean_power > rms_gate;
    }
  }
  return out;
}

enum class CellKind { si_sdri, si_sdr, pes };

inline const char* cell_kind_name(CellKind k) {
  switch (k) {
    case CellKind::si_sdri: return "si_sdri";
    case CellKind::si_sdr: return "si_sdr";
    case CellKind::pes: return "pes";
  }
  return "?";
}

struct CellStats {
  CellKind kind = CellKind::si_sdri;
  double sum_db = 0.0;
  std::int64_t frames = 0;

  double mean_db() const { return frames == 0 ? 0.0 : sum_db / frames; }
};

struct SourceGlobal {
  double si_sdr_sum = 0.0;
  double si_sdri_sum = 0.0;
  std::int64_t tracks = 0;

  std::optional<double> si_sdr_db() const {
    return tracks == 0 ? std::nullopt : std::make_optional(si_sdr_sum / tracks);
  }
  std::optional<double> si_sdri_db() const {
    return tracks == 0 ? std::nullopt : std::make_optional(si_sdri_sum / tracks);
  }
};

// Scenario keys in the order the seven activity patterns are reported.
constexpr std::array<const char*, 7> kScenarioKeys = {"MSX", "SX", "MX", "MS",
                                                      "M",   "S",  "X"};

inline std::string scenario_key(const std::array<bool, 3>& active) {
  std::string key;
  if (active[0]) key += 'M';
  if (active[1]) key += 'S';
  if (active[2]) key += 'X';
  return key;
}

// Per-source / per-scenario aggregates. Sums and frame counts are kept so
// reports merge associatively across mixtures (weighted by frames).
struct EvalReport {
  double segment_s = 1.0;
  std::array<SourceGlobal, 3> global;
  std::map<std::string, std::array<CellStats, 3>> scenarios;
  std::map<std::string, std::int64_t> frame_counts;

  void merge(const EvalReport& other) {
    for (int j = 0; j < 3; ++j) {
      global[j].si_sdr_sum += other.global[j].si_sdr_sum;
      global[j].si_sdri_sum += other.global[j].si_sdri_sum;
      global[j].tracks += other.global[j].tracks;
    }
    for (const auto& [key, cells] : other.scenarios) {
      auto& mine = scenarios[key];
      for (int j = 0; j < 3; ++j) {
        mine[j].kind = cells[j].kind;
        mine[j].sum_db += cells[j].sum_db;
        mine[j].frames += cells[j].frames;
      }
    }
    for (const auto& [key, n] : other.frame_counts) frame_counts[key] += n;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["segment_s"] = segment_s;
    nlohmann::json jg;
    for (int s = 0; s < 3; ++s) {
      nlohmann::json je;
      const auto sdr = global[s].si_sdr_db();
      const auto sdri = global[s].si_sdri_db();
      je["si_sdr_db"] = sdr.has_value() ? nlohmann::json(*sdr) : nlohmann::json();
      je["si_sdri_db"] = sdri.has_value() ? nlohmann::json(*sdri) : nlohmann::json();
      jg[kStemNames[s]] = je;
    }
    j["global"] = jg;
    nlohmann::json js;
    for (const char* key : kScenarioKeys) {
      const auto it = scenarios.find(key);
      nlohmann::json jc = nlohmann::json::object();
      if (it != scenarios.end()) {
        for (int s = 0; s < 3; ++s) {
          const CellStats& cell = it->second[s];
          nlohmann::json je;
          je["kind"] = cell_kind_name(cell.kind);
          je["db"] = cell.frames > 0 ? nlohmann::json(cell.mean_db()) : nlohmann::json();
          je["frames"] = cell.frames;
          jc[kStemNames[s]] = je;
        }
      }
      js[key] = jc;
    }
    j["scenarios"] = js;
    nlohmann::json jf;
    for (const char* key : kScenarioKeys) {
      const auto it = frame_counts.find(key);
      jf[key] = it == frame_counts.end() ? 0 : it->second;
    }
    const auto silent = frame_counts.find("silent");
    jf["silent"] = silent == frame_counts.end() ? 0 : silent->second;
    j["frame_counts"] = jf;
    return j;
  }
};

// Segmental + global evaluation of one mixture's three estimates. Per
// segment and source: SI-SDR improvement when the source is active with
// company, absolute SI-SDR when it is the only active source, PES when it
// is inactive. All-silent segments are counted but carry no cells.
inline EvalReport evaluate(const std::array<const AudioBuffer*, 3>& estimates,
                           const std::array<const AudioBuffer*, 3>& references,
                           const AudioBuffer& mixture, const AnnotationManifest& manifest,
                           double segment_s = 1.0) {
  for (int j = 0; j < 3; ++j) {
    if (estimates[j]->size() != mixture.size() || references[j]->size() != mixture.size())
      throw ValidationError("evaluate: estimate/reference/mixture length mismatch");
  }

  EvalReport report;
  report.segment_s = segment_s;
  for (const char* key : kScenarioKeys) {
    auto& cells = report.scenarios[key];
    const std::string k = key;
    const std::array<bool, 3> active = {k.find('M') != std::string::npos,
                                        k.find('S') != std::string::npos,
                                        k.find('X') != std::string::npos};
    const int n_active = active[0] + active[1] + active[2];
    for (int j = 0; j < 3; ++j)
      cells[j].kind = !active[j] ? CellKind::pes
                                 : (n_active > 1 ? CellKind::si_sdri : CellKind::si_sdr);
    report.frame_counts[key] = 0;
  }
  report.frame_counts["silent"] = 0;

  // Global full-length scores.
  for (int j = 0; j < 3; ++j) {
    double ref_energy = 0.0;
    for (double v : references[j]->samples) ref_energy += v * v;
    if (ref_energy > kMetricEps) {
      const double sdr = si_sdr(*estimates[j], *references[j]);
      const double mix_sdr = si_sdr(mixture, *references[j]);
      report.global[j].si_sdr_sum += sdr;
      report.global[j].si_sdri_sum += sdr - mix_sdr;
      report.global[j].tracks += 1;
    }
  }

  const auto activity = segment_activity(manifest, references, segment_s);
  const auto seg_len =
      static_cast<std::size_t>(std::llround(segment_s * manifest.sample_rate));
  for (std::size_t k = 0; k < activity.size(); ++k) {
    const auto& active = activity[k];
    const int n_active = active[0] + active[1] + active[2];
    if (n_active == 0) {
      ++report.frame_counts["silent"];
      continue;
    }
    const std::string key = scenario_key(active);
    ++report.frame_counts[key];
    auto& cells = report.scenarios[key];
    const std::size_t s0 = k * seg_len;
    const std::size_t s1 = std::min(s0 + seg_len, mixture.size());
    for (int j = 0; j < 3; ++j) {
      const std::span<const double> est(estimates[j]->samples.data() + s0, s1 - s0);
      const std::span<const double> ref(references[j]->samples.data() + s0, s1 - s0);
      const std::span<const double> mix(mixture.samples.data() + s0, s1 - s0);
      double value;
      if (!active[j]) {
        value = pes(est);
      } else if (n_active > 1) {
        value = si_sdr_improvement(est, ref, mix);
      } else {
        value = si_sdr(est, ref);
      }
      cells[j].sum_db += value;
      cells[j].frames += 1;
    }
  }
  return report;
}

// Oracle phase-sensitive filter: mask = clamp(|X| cos(angle(X) - angle(Y))
// / |Y|, 0, 1) applied to the mixture spectrogram, one source at a time.
// An upper-bound baseline for mask-based separation.
inline std::array<AudioBuffer, 3> oracle_psf(const AudioBuffer& mixture,
                                             const std::array<const AudioBuffer*, 3>& references,
                                             const StftConfig& cfg) {
  const Spectrogram mix_spec = stft(mixture, cfg);
  std::array<AudioBuffer, 3> out;
  for (int j = 0; j < 3; ++j) {
    const Spectrogram ref_spec = stft(*references[j], cfg);
    Spectrogram masked = mix_spec;
    for (std::size_t i = 0; i < masked.data.size(); ++i) {
      const std::complex<double> y = mix_spec.data[i];
      const double y_power = std::norm(y);
      double mask = 0.0;
      if (y_power > 0.0) {
        // |X| cos(angle difference) / |Y| = Re(X conj(Y)) / |Y|^2.
        mask = (ref_spec.data[i] * std::conj(y)).real() / y_power;
        mask = std::clamp(mask, 0.0, 1.0);
      }
      masked.data[i] = y * mask;
    }
    out[j] = istft(masked, mixture.size());
  }
  return out;
}

inline std::array<AudioBuffer, 3> oracle_psf(const AudioBuffer& mixture,
                                             const std::array<const AudioBuffer*, 3>& references) {
  return oracle_psf(mixture, references,
                    StftConfig::from_ms(32.0, mixture.sample_rate,
                                        quantize_window(8.0, mixture.sample_rate)));
}

// Plain-text scenario table: SI-SDRi unmarked, absolute SI-SDR marked *,
// PES marked with a dagger.
inline std::string render_scenario_table(const EvalReport& report) {
  std::ostringstream os;
  os << "Source   ";
  for (const char* key : kScenarioKeys) {
    os.width(12);
    os << key;
  }
  os << "\nFrames   ";
  for (const char* key : kScenarioKeys) {
    const auto it = report.frame_counts.find(key);
    os.width(12);
    os << (it == report.frame_counts.end() ? 0 : it->second);
  }
  os << "\n";
  os.setf(std::ios::fixed);
  os.precision(2);
  for (int s = 0; s < 3; ++s) {
    os.width(9);
    os.setf(std::ios::left, std::ios::adjustfield);
    os << kStemNames[s];
    os.setf(std::ios::right, std::ios::adjustfield);
    for (const char* key : kScenarioKeys) {
      const auto it = report.scenarios.find(key);
      std::string cell = "-";
      if (it != report.scenarios.end() && it->second[s].frames > 0) {
        std::ostringstream c;
        c.setf(std::ios::fixed);
        c.precision(2);
        c << it->second[s].mean_db();
        if (it->second[s].kind == CellKind::pes) c << "+";   // dagger: PES
        if (it->second[s].kind == CellKind::si_sdr) c << "*";  // only source active
        cell = c.str();
      }
      os.width(12);
      os << cell;
    }
    os << "\n";
  }
  os << "(* absolute SI-SDR, single active source; + PES, source silent;"
     << " unmarked: SI-SDR improvement)\n";
  return os.str();
}

}  // namespace mrx

#endif  // MRX_METRICS_HPP
