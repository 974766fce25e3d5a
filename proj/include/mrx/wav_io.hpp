// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef MRX_WAV_IO_HPP
#define MRX_WAV_IO_HPP

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mrx/audio.hpp"

namespace mrx {

enum class WavEncoding { pcm16, float32 };

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

// Reads a RIFF/WAVE file holding PCM16 or IEEE float32 samples, 1 or 2
// channels. Stereo is downmixed by arithmetic mean.
inline AudioBuffer read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open WAV file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw FormatError("not a RIFF/WAVE file: " + path);

  int format = -1, channels = 0, bits = 0, rate = 0;
  std::size_t data_pos = 0, data_len = 0;
  bool saw_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_len = detail::get_u32(&bytes[pos + 4]);
    const unsigned char* body = bytes.data() + pos + 8;
    if (pos + 8 + chunk_len > bytes.size())
      throw FormatError("truncated chunk in WAV file: " + path);
    if (std::memcmp(&bytes[pos], "fmt ", 4) == 0) {
      if (chunk_len < 16) throw FormatError("short fmt chunk: " + path);
      format = detail::get_u16(body);
      channels = detail::get_u16(body + 2);
      rate = static_cast<int>(detail::get_u32(body + 4));
      bits = detail::get_u16(body + 14);
    } else if (std::memcmp(&bytes[pos], "data", 4) == 0) {
      data_pos = pos + 8;
      data_len = chunk_len;
      saw_data = true;
    }
    pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }
  if (format < 0) throw FormatError("missing fmt chunk: " + path);
  if (!saw_data) throw FormatError("missing data chunk: " + path);
  if (channels < 1 || channels > 2)
    throw FormatError("unsupported channel count " + std::to_string(channels) +
                      ": " + path);
  if (!valid_sample_rate(rate))
    throw FormatError("unsupported sample rate " + std::to_string(rate) + ": " + path);

  const unsigned char* data = bytes.data() + data_pos;
  AudioBuffer out;
  out.sample_rate = rate;
  if (format == 1) {
    if (bits != 16)
      throw FormatError("unsupported PCM bit depth " + std::to_string(bits) + ": " + path);
    const std::size_t frames = data_len / (2 * channels);
    out.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
      double acc = 0.0;
      for (int c = 0; c < channels; ++c) {
        const std::int16_t s =
            static_cast<std::int16_t>(detail::get_u16(data + 2 * (i * channels + c)));
        acc += s / 32768.0;
      }
      out.samples[i] = acc / channels;
    }
  } else if (format == 3) {
    if (bits != 32)
      throw FormatError("unsupported float bit depth " + std::to_string(bits) + ": " + path);
    const std::size_t frames = data_len / (4 * channels);
    out.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
      double acc = 0.0;
      for (int c = 0; c < channels; ++c) {
        const std::uint32_t u = detail::get_u32(data + 4 * (i * channels + c));
        float v;
        std::memcpy(&v, &u, 4);
        acc += v;
      }
      out.samples[i] = acc / channels;
    }
  } else {
    throw FormatError("unsupported WAV codec " + std::to_string(format) + ": " + path);
  }
  return out;
}

// Writes a mono WAV file. float32 preserves the (float-rounded) samples
// bit-exactly; pcm16 clips to [-32768, 32767] with round-to-nearest.
inline void write_wav(const std::string& path, const AudioBuffer& buffer,
                      WavEncoding encoding = WavEncoding::float32) {
  std::string body;
  const std::uint32_t n = static_cast<std::uint32_t>(buffer.samples.size());
  if (encoding == WavEncoding::pcm16) {
    body.reserve(2 * n);
    for (double v : buffer.samples) {
      const double scaled = std::lround(v * 32768.0);
      const auto s = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
      detail::put_u16(body, static_cast<std::uint16_t>(s));
    }
  } else {
    body.reserve(4 * n);
    for (double v : buffer.samples) {
      const float fv = static_cast<float>(v);
      std::uint32_t u;
      std::memcpy(&u, &fv, 4);
      detail::put_u32(body, u);
    }
  }

  const std::uint16_t bytes_per_sample = encoding == WavEncoding::pcm16 ? 2 : 4;
  std::string out;
  out.reserve(44 + body.size());
  out += "RIFF";
  detail::put_u32(out, static_cast<std::uint32_t>(36 + body.size()));
  out += "WAVEfmt ";
  detail::put_u32(out, 16);
  detail::put_u16(out, encoding == WavEncoding::pcm16 ? 1 : 3);
  detail::put_u16(out, 1);  // mono
  detail::put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate));
  detail::put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate) * bytes_per_sample);
  detail::put_u16(out, bytes_per_sample);
  detail::put_u16(out, static_cast<std::uint16_t>(8 * bytes_per_sample));
  out += "data";
  detail::put_u32(out, static_cast<std::uint32_t>(body.size()));
  out += body;

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("short write: " + path);
}

}  // namespace mrx

#endif  // MRX_WAV_IO_HPP
