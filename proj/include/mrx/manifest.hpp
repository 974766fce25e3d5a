// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef MRX_MANIFEST_HPP
#define MRX_MANIFEST_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrx/audio.hpp"

namespace mrx {

enum class SourceClass { music, speech, sfx_fg, sfx_bg };

constexpr std::array<SourceClass, 4> kAllClasses = {
    SourceClass::music, SourceClass::speech, SourceClass::sfx_fg, SourceClass::sfx_bg};

inline const char* class_name(SourceClass c) {
  switch (c) {
    case SourceClass::music: return "music";
    case SourceClass::speech: return "speech";
    case SourceClass::sfx_fg: return "sfx_fg";
    case SourceClass::sfx_bg: return "sfx_bg";
  }
  return "?";
}

inline SourceClass class_from_name(const std::string& name) {
  for (SourceClass c : kAllClasses)
    if (name == class_name(c)) return c;
  throw ValidationError("unknown source class: \"" + name + "\"");
}

// One placed clip. Times are seconds relative to the mixture start;
// source_start_s is the excerpt offset inside the source file.
struct Event {
  SourceClass source_class = SourceClass::music;
  std::string source_file;
  double source_start_s = 0.0;
  double onset_s = 0.0;
  double offset_s = 0.0;
  double gain_db = 0.0;
  nlohmann::json metadata;  // object or null

  double duration_s() const { return offset_s - onset_s; }
};

// Full generative record of one mixture: everything needed to re-render it
// and to derive activity ground truth.
struct AnnotationManifest {
  std::string mixture_id;
  double duration_s = 60.0;
  int sample_rate = 44100;
  std::map<SourceClass, double> class_lufs;
  std::vector<Event> events;
};

inline void validate_manifest(const AnnotationManifest& m) {
  if (m.mixture_id.empty()) throw ValidationError("manifest field mixture_id: empty");
  if (!(m.duration_s > 0.0)) throw ValidationError("manifest field duration_s: must be > 0");
  if (!valid_sample_rate(m.sample_rate))
    throw ValidationError("manifest field sample_rate: out of range [8000, 192000]");
  for (SourceClass c : kAllClasses) {
    const auto it = m.class_lufs.find(c);
    if (it == m.class_lufs.end())
      throw ValidationError(std::string("manifest field class_lufs: missing class \"") +
                            class_name(c) + "\"");
    if (!std::isfinite(it->second))
      throw ValidationError(std::string("manifest field class_lufs.") + class_name(c) +
                            ": not finite");
  }
  for (std::size_t i = 0; i < m.events.size(); ++i) {
    const Event& e = m.events[i];
    const std::string where = "manifest event " + std::to_string(i);
    if (e.source_file.empty()) throw ValidationError(where + " field source_file: empty");
    if (!(e.source_start_s >= 0.0))
      throw ValidationError(where + " field source_start_s: must be >= 0");
    if (!(e.onset_s >= 0.0)) throw ValidationError(where + " field onset_s: must be >= 0");
    if (!(e.offset_s > e.onset_s))
      throw ValidationError(where + " field offset_s: must be > onset_s");
    if (!(e.offset_s <= m.duration_s))
      throw ValidationError(where + " field offset_s: exceeds duration_s");
    if (!std::isfinite(e.gain_db))
      throw ValidationError(where + " field gain_db: not finite");
  }
  // Within-class overlap. sfx_fg and sfx_bg are distinct classes, so their
  // mutual overlap is allowed by construction.
  for (SourceClass c : kAllClasses) {
    std::vector<const Event*> evs;
    for (const Event& e : m.events)
      if (e.source_class == c) evs.push_back(&e);
    std::sort(evs.begin(), evs.end(),
              [](const Event* a, const Event* b) { return a->onset_s < b->onset_s; });
    for (std::size_t i = 1; i < evs.size(); ++i) {
      if (evs[i]->onset_s < evs[i - 1]->offset_s)
        throw ValidationError(std::string("manifest: overlapping \"") + class_name(c) +
                              "\" events at " + std::to_string(evs[i]->onset_s) + " s");
    }
  }
}

inline nlohmann::json manifest_to_json(const AnnotationManifest& m) {
  nlohmann::json j;
  j["mixture_id"] = m.mixture_id;
  j["duration_s"] = m.duration_s;
  j["sample_rate"] = m.sample_rate;
  nlohmann::json lufs;
  for (SourceClass c : kAllClasses) lufs[class_name(c)] = m.class_lufs.at(c);
  j["class_lufs"] = lufs;
  nlohmann::json events = nlohmann::json::array();
  for (const Event& e : m.events) {
    nlohmann::json je;
    je["class"] = class_name(e.source_class);
    je["source_file"] = e.source_file;
    je["source_start_s"] = e.source_start_s;
    je["onset_s"] = e.onset_s;
    je["offset_s"] = e.offset_s;
    je["gain_db"] = e.gain_db;
    je["metadata"] = e.metadata.is_null() ? nlohmann::json() : e.metadata;
    events.push_back(je);
  }
  j["events"] = events;
  return j;
}

inline AnnotationManifest manifest_from_json(const nlohmann::json& j) {
  const auto need = [&](const nlohmann::json& obj, const char* key) -> const nlohmann::json& {
    const auto it = obj.find(key);
    if (it == obj.end())
      throw ValidationError(std::string("manifest field ") + key + ": missing");
    return *it;
  };
  AnnotationManifest m;
  try {
    m.mixture_id = need(j, "mixture_id").get<std::string>();
    m.duration_s = need(j, "duration_s").get<double>();
    m.sample_rate = need(j, "sample_rate").get<int>();
    const nlohmann::json& lufs = need(j, "class_lufs");
    for (SourceClass c : kAllClasses)
      m.class_lufs[c] = need(lufs, class_name(c)).get<double>();
    for (const nlohmann::json& je : need(j, "events")) {
      Event e;
      e.source_class = class_from_name(need(je, "class").get<std::string>());
      e.source_file = need(je, "source_file").get<std::string>();
      e.source_start_s = need(je, "source_start_s").get<double>();
      e.onset_s = need(je, "onset_s").get<double>();
      e.offset_s = need(je, "offset_s").get<double>();
      e.gain_db = need(je, "gain_db").get<double>();
      if (je.contains("metadata")) e.metadata = je["metadata"];
      m.events.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("manifest: malformed JSON value: ") + ex.what());
  }
  validate_manifest(m);
  return m;
}

inline AnnotationManifest read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open manifest: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError("manifest " + path + ": invalid JSON: " + ex.what());
  }
  return manifest_from_json(j);
}

inline void write_manifest(const std::string& path, const AnnotationManifest& m) {
  validate_manifest(m);
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << manifest_to_json(m).dump(2) << "\n";
}

}  // namespace mrx

#endif  // MRX_MANIFEST_HPP
