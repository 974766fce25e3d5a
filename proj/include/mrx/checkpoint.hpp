// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Named-array container: an 8-byte little-endian header length, a UTF-8
// JSON header {"version", "config", "arrays": [{"name", "shape"}, ...]},
// then the raw little-endian float32 arrays concatenated in header order.
// Full layout notes live in docs/checkpoint_format.md.

#ifndef MRX_CHECKPOINT_HPP
#define MRX_CHECKPOINT_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrx/audio.hpp"

namespace mrx {

struct CheckpointArray {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<float> data;
};

struct Checkpoint {
  static constexpr int kVersion = 1;

  nlohmann::json config;  // model/run configuration, format-specific
  std::vector<CheckpointArray> arrays;

  const CheckpointArray* find(const std::string& name) const {
    for (const auto& a : arrays)
      if (a.name == name) return &a;
    return nullptr;
  }

  void save(const std::string& path) const {
    nlohmann::json header;
    header["version"] = kVersion;
    header["config"] = config;
    nlohmann::json list = nlohmann::json::array();
    for (const auto& a : arrays) {
      nlohmann::json ja;
      ja["name"] = a.name;
      ja["shape"] = a.shape;
      list.push_back(ja);
    }
    header["arrays"] = list;
    const std::string header_bytes = header.dump();

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    const std::uint64_t len = header_bytes.size();
    char len_le[8];
    for (int i = 0; i < 8; ++i) len_le[i] = static_cast<char>((len >> (8 * i)) & 0xff);
    f.write(len_le, 8);
    f.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));
    for (const auto& a : arrays) {
      const auto expect = std::accumulate(a.shape.begin(), a.shape.end(), std::int64_t{1},
                                          std::multiplies<>());
      if (expect != static_cast<std::int64_t>(a.data.size()))
        throw std::runtime_error("checkpoint array " + a.name + " shape/data mismatch");
      static_assert(sizeof(float) == 4);
      // Little-endian host assumed (checked below on load as well).
      f.write(reinterpret_cast<const char*>(a.data.data()),
              static_cast<std::streamsize>(a.data.size() * 4));
    }
    if (!f) throw std::runtime_error("short write: " + path);
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open checkpoint: " + path);
    char len_le[8];
    f.read(len_le, 8);
    if (!f) throw FormatError("truncated checkpoint header: " + path);
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i)
      len |= static_cast<std::uint64_t>(static_cast<unsigned char>(len_le[i])) << (8 * i);
    if (len > (1u << 26)) throw FormatError("implausible checkpoint header size: " + path);
    std::string header_bytes(len, '\0');
    f.read(header_bytes.data(), static_cast<std::streamsize>(len));
    if (!f) throw FormatError("truncated checkpoint header: " + path);

    nlohmann::json header;
    try {
      header = nlohmann::json::parse(header_bytes);
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError("checkpoint " + path + ": invalid header JSON: " + ex.what());
    }
    if (header.value("version", -1) != kVersion)
      throw FormatError("checkpoint " + path + ": unsupported version");

    Checkpoint out;
    out.config = header.value("config", nlohmann::json::object());
    for (const auto& ja : header.at("arrays")) {
      CheckpointArray a;
      a.name = ja.at("name").get<std::string>();
      a.shape = ja.at("shape").get<std::vector<std::int64_t>>();
      const auto count = std::accumulate(a.shape.begin(), a.shape.end(), std::int64_t{1},
                                         std::multiplies<>());
      a.data.resize(static_cast<std::size_t>(count));
      f.read(reinterpret_cast<char*>(a.data.data()),
             static_cast<std::streamsize>(count * 4));
      if (!f) throw FormatError("checkpoint " + path + ": truncated array " + a.name);
      out.arrays.push_back(std::move(a));
    }
    return out;
  }
};

}  // namespace mrx

#endif  // MRX_CHECKPOINT_HPP
