// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef MRX_MIXGEN_HPP
#define MRX_MIXGEN_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrx/audio.hpp"
#include "mrx/loudness.hpp"
#include "mrx/manifest.hpp"
#include "mrx/rng.hpp"
#include "mrx/wav_io.hpp"

namespace mrx {

// Per-class mixing parameters. Defaults follow the production profile:
// expected clip counts 7/8/12/6 and targets -24/-17/-21/-29 LUFS for
// music/speech/sfx_fg/sfx_bg, class level jitter +-2 LU per mixture and
// +-1 LU per clip.
struct ClassMixProfile {
  SourceClass source_class = SourceClass::music;
  double lambda = 1.0;            // expected clip count (zero-truncated)
  double target_lufs = -24.0;
  double mixture_jitter_lu = 2.0;
  double clip_jitter_lu = 1.0;
  double min_excerpt_s = 1.0;     // shortest sub-segment taken from a clip
  // Largest silence inserted before a clip. <= 0 means the default
  // duration_s / lambda, which keeps each class timeline mostly occupied.
  double gap_max_s = 0.0;

  static std::vector<ClassMixProfile> defaults() {
    ClassMixProfile music{SourceClass::music, 7.0, -24.0, 2.0, 1.0, 3.0, 0.0};
    ClassMixProfile speech{SourceClass::speech, 8.0, -17.0, 2.0, 1.0, 1.0, 0.0};
    ClassMixProfile sfx_fg{SourceClass::sfx_fg, 12.0, -21.0, 2.0, 1.0, 1.0, 0.0};
    ClassMixProfile sfx_bg{SourceClass::sfx_bg, 6.0, -29.0, 2.0, 1.0, 1.0, 0.0};
    return {music, speech, sfx_fg, sfx_bg};
  }
};

struct ClipEntry {
  std::string path;
  double duration_s = 0.0;
  nlohmann::json metadata;
};

// Labeled clips per class, partitioned by corpus split.
struct ClipPool {
  std::map<std::string, std::map<SourceClass, std::vector<ClipEntry>>> splits;

  const std::vector<ClipEntry>* entries(const std::string& split, SourceClass c) const {
    const auto s = splits.find(split);
    if (s == splits.end()) return nullptr;
    const auto it = s->second.find(c);
    return it == s->second.end() ? nullptr : &it->second;
  }
};

struct MixtureSpec {
  std::uint64_t seed = 0;
  double duration_s = 60.0;
  int sample_rate = 44100;
  std::vector<ClassMixProfile> profiles = ClassMixProfile::defaults();
};

struct RenderResult {
  AudioBuffer mixture;
  AudioBuffer music;
  AudioBuffer speech;
  AudioBuffer sfx;
  AnnotationManifest manifest;
};

// Zero-truncated Poisson: Poisson(lambda) conditioned on k >= 1, drawn by
// rejecting zeros. Below 1e-6 the conditional mass at k = 1 exceeds
// 1 - 5e-13, so the limit value is returned directly instead of spinning
// through ~1/lambda rejected draws.
inline int sample_ztp(double lambda, Rng& rng) {
  if (!(lambda > 0.0)) throw std::invalid_argument("sample_ztp: lambda must be > 0");
  if (lambda < 1e-6) return 1;
  int k = 0;
  do {
    k = rng.poisson(lambda);
  } while (k == 0);
  return k;
}

inline double ztp_mean(double lambda) { return lambda / (1.0 - std::exp(-lambda)); }

namespace detail {

inline double snap_to_grid(double t, int rate) {
  return std::round(t * rate) / static_cast<double>(rate);
}

// Shortest placed excerpt that still supports a loudness measurement.
constexpr double kMinPlacedS = 0.5;

}  // namespace detail

// Lays one class's clips onto the timeline: k = ztp(lambda) clips, a
// uniform silence gap before each, whole utterances for speech and random
// sub-segments for the other classes. Events overrunning duration_s are
// truncated; sliver events too short to level are dropped. Events of one
// class never overlap by construction.
inline std::vector<Event> plan_class_track(const ClassMixProfile& profile,
                                           const std::vector<ClipEntry>& pool,
                                           double duration_s, int sample_rate, Rng& rng) {
  if (pool.empty())
    throw ValidationError(std::string("clip pool has no entries for class \"") +
                          class_name(profile.source_class) + "\"");
  if (!(profile.lambda > 0.0))
    throw ValidationError(std::string("profile lambda must be > 0 for class \"") +
                          class_name(profile.source_class) + "\"");

  const double gap_max = profile.gap_max_s > 0.0
                             ? profile.gap_max_s
                             : std::min(duration_s, duration_s / profile.lambda);

  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<Event> events;
    const int k = sample_ztp(profile.lambda, rng);
    double cursor = 0.0;
    for (int i = 0; i < k && cursor < duration_s; ++i) {
      const double onset =
          detail::snap_to_grid(cursor + rng.uniform(0.0, gap_max), sample_rate);
      if (onset >= duration_s - detail::kMinPlacedS) break;

      const ClipEntry& entry = pool[rng.uniform_index(pool.size())];
      double seg_len, seg_start;
      if (profile.source_class == SourceClass::speech) {
        // Whole utterances keep the transcript annotation meaningful.
        seg_len = entry.duration_s;
        seg_start = 0.0;
      } else {
        const double min_len = std::min(profile.min_excerpt_s, entry.duration_s);
        seg_len = rng.uniform(min_len, entry.duration_s);
        seg_start = rng.uniform(0.0, entry.duration_s - seg_len);
      }
      double offset = onset + seg_len;
      if (offset > duration_s) offset = duration_s;  // truncate at the boundary
      offset = detail::snap_to_grid(offset, sample_rate);
      if (offset - onset < detail::kMinPlacedS) {
        cursor = offset;
        continue;
      }

      Event e;
      e.source_class = profile.source_class;
      e.source_file = entry.path;
      e.source_start_s = detail::snap_to_grid(seg_start, sample_rate);
      e.onset_s = onset;
      e.offset_s = offset;
      e.gain_db = 0.0;
      e.metadata = entry.metadata;
      events.push_back(std::move(e));
      cursor = offset;
    }
    if (!events.empty()) return events;
  }
  throw std::runtime_error(std::string("could not fit any \"") +
                           class_name(profile.source_class) +
                           "\" clip into the mixture after 100 attempts");
}

namespace detail {

inline AudioBuffer load_excerpt(const Event& e, int sample_rate) {
  const AudioBuffer full = read_wav(e.source_file);
  if (full.sample_rate != sample_rate)
    throw ValidationError("source file " + e.source_file + " has sample rate " +
                          std::to_string(full.sample_rate) + ", mixture needs " +
                          std::to_string(sample_rate));
  const auto begin = static_cast<std::size_t>(std::llround(e.source_start_s * sample_rate));
  const auto want =
      static_cast<std::size_t>(std::llround((e.offset_s - e.onset_s) * sample_rate));
  AudioBuffer out;
  out.sample_rate = sample_rate;
  if (begin >= full.size()) return out;
  const std::size_t end = std::min(begin + want, full.size());
  out.samples.assign(full.samples.begin() + begin, full.samples.begin() + end);
  return out;
}

}  // namespace detail

// Samples one loudness target per class (uniform around the profile target)
// and levels each event so its excerpt, as placed, hits that target plus
// the per-clip jitter. Events whose excerpt is unmeasurable (silent) are
// re-drawn from the pool a few times, then dropped.
inline std::map<SourceClass, double> assign_levels(std::vector<Event>& events,
                                                   const std::vector<ClassMixProfile>& profiles,
                                                   const ClipPool& pool,
                                                   const std::string& split,
                                                   int sample_rate, Rng& rng) {
  std::map<SourceClass, double> class_lufs;
  std::map<SourceClass, const ClassMixProfile*> by_class;
  for (const auto& p : profiles) by_class[p.source_class] = &p;

  // Fixed draw order over all four classes keeps the stream layout stable
  // whether or not a class ended up with events.
  for (SourceClass c : kAllClasses) {
    const auto it = by_class.find(c);
    const double target = it == by_class.end() ? -24.0 : it->second->target_lufs;
    const double jitter = it == by_class.end() ? 0.0 : it->second->mixture_jitter_lu;
    class_lufs[c] = target + rng.uniform(-jitter, jitter);
  }

  std::vector<Event> kept;
  kept.reserve(events.size());
  for (Event e : events) {
    const ClassMixProfile* profile = by_class.at(e.source_class);
    std::optional<double> measured;
    for (int attempt = 0; attempt < 10; ++attempt) {
      const AudioBuffer excerpt = detail::load_excerpt(e, sample_rate);
      measured = excerpt.duration_s() < 0.4 ? std::nullopt : integrated_lufs(excerpt);
      if (measured.has_value()) break;
      // Silent excerpt: re-draw the source clip, keeping the slot. The
      // replacement may be shorter; shrinking preserves non-overlap.
      const auto* entries = pool.entries(split, e.source_class);
      if (entries == nullptr || entries->empty()) break;
      const ClipEntry& entry = (*entries)[rng.uniform_index(entries->size())];
      const double want = e.offset_s - e.onset_s;
      const double seg_len = std::min(want, entry.duration_s);
      const double seg_start = rng.uniform(0.0, entry.duration_s - seg_len);
      e.source_file = entry.path;
      e.source_start_s = detail::snap_to_grid(seg_start, sample_rate);
      e.offset_s = detail::snap_to_grid(e.onset_s + seg_len, sample_rate);
      e.metadata = entry.metadata;
      if (e.offset_s - e.onset_s < detail::kMinPlacedS) break;
    }
    if (!measured.has_value()) continue;  // drop unlevelable event
    const double jitter = rng.uniform(-profile->clip_jitter_lu, profile->clip_jitter_lu);
    e.gain_db = class_lufs[e.source_class] - *measured + jitter;
    kept.push_back(std::move(e));
  }
  events = std::move(kept);
  return class_lufs;
}

namespace detail {

inline void add_event_to(AudioBuffer& stem, const Event& e, int sample_rate) {
  const AudioBuffer excerpt = load_excerpt(e, sample_rate);
  const double g = db_to_linear(e.gain_db);
  const auto at = static_cast<std::size_t>(std::llround(e.onset_s * sample_rate));
  const std::size_t n = std::min(excerpt.size(), stem.size() - std::min(at, stem.size()));
  for (std::size_t i = 0; i < n; ++i) stem.samples[at + i] += g * excerpt.samples[i];
}

// Snap to float32 so the stem is exactly representable in the WAV files;
// the mixture is then the exact sample-wise double sum of the three stems.
inline void snap_to_float32(AudioBuffer& b) {
  for (double& v : b.samples) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace detail

// Renders ground-truth stems and the mixture from a leveled manifest.
// Foreground and background effects are combined into the single sfx stem.
// The mixture is the exact sample-wise sum of the three stems.
inline RenderResult render(const AnnotationManifest& manifest) {
  const int rate = manifest.sample_rate;
  const auto total = static_cast<std::size_t>(std::llround(manifest.duration_s * rate));

  RenderResult out;
  for (AudioBuffer* b : {&out.music, &out.speech, &out.sfx, &out.mixture}) {
    b->sample_rate = rate;
    b->samples.assign(total, 0.0);
  }
  for (const Event& e : manifest.events) {
    switch (e.source_class) {
      case SourceClass::music: detail::add_event_to(out.music, e, rate); break;
      case SourceClass::speech: detail::add_event_to(out.speech, e, rate); break;
      case SourceClass::sfx_fg:
      case SourceClass::sfx_bg: detail::add_event_to(out.sfx, e, rate); break;
    }
  }
  detail::snap_to_float32(out.music);
  detail::snap_to_float32(out.speech);
  detail::snap_to_float32(out.sfx);
  for (std::size_t i = 0; i < total; ++i)
    out.mixture.samples[i] =
        out.music.samples[i] + out.speech.samples[i] + out.sfx.samples[i];
  out.manifest = manifest;
  return out;
}

// Plans, levels, and renders one mixture. Deterministic in (spec.seed,
// mixture_index, pool, profiles); each mixture consumes its own child
// random stream so corpora can be generated in parallel.
inline RenderResult generate_mixture(const MixtureSpec& spec, std::uint64_t mixture_index,
                                     const ClipPool& pool, const std::string& split,
                                     const std::string& mixture_id) {
  Rng rng = Rng(spec.seed).child(mixture_index);

  std::vector<Event> events;
  for (const ClassMixProfile& profile : spec.profiles) {
    const auto* entries = pool.entries(split, profile.source_class);
    if (entries == nullptr || entries->empty())
      throw ValidationError(std::string("clip pool (split \"") + split +
                            "\") has no entries for class \"" +
                            class_name(profile.source_class) + "\"");
    auto planned =
        plan_class_track(profile, *entries, spec.duration_s, spec.sample_rate, rng);
    events.insert(events.end(), planned.begin(), planned.end());
  }

  AnnotationManifest manifest;
  manifest.mixture_id = mixture_id;
  manifest.duration_s = spec.duration_s;
  manifest.sample_rate = spec.sample_rate;
  manifest.class_lufs =
      assign_levels(events, spec.profiles, pool, split, spec.sample_rate, rng);
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.onset_s < b.onset_s; });
  manifest.events = std::move(events);
  validate_manifest(manifest);
  return render(manifest);
}

// Pool serialization. Schema: one object per split, each mapping class
// names to entry lists: {"train": {"music": [{"path", "duration_s",
// "metadata"}, ...], ...}, "validation": {...}, "test": {...}}.
inline nlohmann::json pool_to_json(const ClipPool& pool) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [split, classes] : pool.splits) {
    nlohmann::json js = nlohmann::json::object();
    for (const auto& [cls, entries] : classes) {
      nlohmann::json list = nlohmann::json::array();
      for (const ClipEntry& e : entries) {
        nlohmann::json je;
        je["path"] = e.path;
        je["duration_s"] = e.duration_s;
        je["metadata"] = e.metadata.is_null() ? nlohmann::json() : e.metadata;
        list.push_back(je);
      }
      js[class_name(cls)] = list;
    }
    j[split] = js;
  }
  return j;
}

inline ClipPool pool_from_json(const nlohmann::json& j, const std::string& base_dir = "") {
  ClipPool pool;
  std::map<std::string, std::string> seen;  // path -> split
  try {
    for (const auto& [split, classes] : j.items()) {
      for (const auto& [cls_name, list] : classes.items()) {
        const SourceClass cls = class_from_name(cls_name);
        auto& entries = pool.splits[split][cls];
        for (const auto& je : list) {
          ClipEntry e;
          e.path = je.at("path").get<std::string>();
          if (!base_dir.empty() && !e.path.empty() && e.path.front() != '/')
            e.path = base_dir + "/" + e.path;
          e.duration_s = je.at("duration_s").get<double>();
          if (!(e.duration_s > 0.0))
            throw ValidationError("pool entry " + e.path + ": duration_s must be > 0");
          if (je.contains("metadata")) e.metadata = je["metadata"];
          const auto prev = seen.find(e.path);
          if (prev != seen.end() && prev->second != split)
            throw ValidationError("pool entry " + e.path + " appears in splits \"" +
                                  prev->second + "\" and \"" + split + "\"");
          seen[e.path] = split;
          entries.push_back(std::move(e));
        }
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("pool: malformed JSON value: ") + ex.what());
  }
  return pool;
}

// Clip-pool ingestion for one source file: trims leading/trailing silence,
// writes the trimmed clip to dest_path, and returns the entry to register.
// Returns nullopt when the file is entirely silent.
inline std::optional<ClipEntry> ingest_clip(const std::string& src_path,
                                            const std::string& dest_path,
                                            const nlohmann::json& metadata = {},
                                            double trim_threshold_db = -60.0) {
  const AudioBuffer raw = read_wav(src_path);
  const AudioBuffer trimmed = trim_silence(raw, trim_threshold_db);
  if (trimmed.empty()) return std::nullopt;
  write_wav(dest_path, trimmed, WavEncoding::float32);
  ClipEntry e;
  e.path = dest_path;
  e.duration_s = trimmed.duration_s();
  e.metadata = metadata;
  return e;
}

// Fractions of frame_s-long frames with 3/2/1/0 active classes, where the
// three classes are music, speech, and sfx (= fg or bg events).
struct OverlapStats {
  std::array<std::int64_t, 4> frames_by_active = {0, 0, 0, 0};  // index = #active

  std::int64_t total() const {
    return frames_by_active[0] + frames_by_active[1] + frames_by_active[2] +
           frames_by_active[3];
  }
  double fraction(int active) const {
    return total() == 0 ? 0.0
                        : static_cast<double>(frames_by_active[active]) / total();
  }
};

inline OverlapStats corpus_overlap_stats(const std::vector<AnnotationManifest>& manifests,
                                         double frame_s = 1.0) {
  OverlapStats stats;
  for (const AnnotationManifest& m : manifests) {
    const auto frames = static_cast<std::int64_t>(std::floor(m.duration_s / frame_s + 1e-9));
    for (std::int64_t k = 0; k < frames; ++k) {
      const double begin = static_cast<double>(k) * frame_s;
      const double end = begin + frame_s;
      bool active[3] = {false, false, false};
      for (const Event& e : m.events) {
        if (e.onset_s < end && e.offset_s > begin) {
          switch (e.source_class) {
            case SourceClass::music: active[0] = true; break;
            case SourceClass::speech: active[1] = true; break;
            default: active[2] = true; break;
          }
        }
      }
      ++stats.frames_by_active[static_cast<int>(active[0]) + static_cast<int>(active[1]) +
                               static_cast<int>(active[2])];
    }
  }
  return stats;
}

}  // namespace mrx

#endif  // MRX_MIXGEN_HPP
