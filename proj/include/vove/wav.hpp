// Copyright 2026 The Vo-Ve Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "vove/error.hpp"

namespace vove {

// Decoded uncompressed audio. Samples are interleaved, scaled to [-1, 1].
struct WavData {
  int sample_rate = 0;
  int num_channels = 0;
  std::vector<double> samples;

  std::size_t frames() const {
    return num_channels ? samples.size() / num_channels : 0;
  }
};

namespace detail {

inline std::uint32_t read_u32le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16le(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] |
                                    (static_cast<std::uint16_t>(p[1]) << 8));
}

inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 24) & 0xff);
}

inline void put_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
}

}  // namespace detail

// Reads a RIFF/WAVE file. Supported encodings: PCM 16/24/32-bit integer and
// 32-bit IEEE float. Unknown chunks are skipped.
inline WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open audio file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw FormatError("not a RIFF/WAVE file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const std::uint8_t* data_ptr = nullptr;
  std::uint32_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* hdr = bytes.data() + pos;
    std::uint32_t chunk_len = detail::read_u32le(hdr + 4);
    const std::uint8_t* body = hdr + 8;
    if (pos + 8 + chunk_len > bytes.size())
      throw FormatError("truncated chunk in " + path);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw FormatError("short fmt chunk in " + path);
      format = detail::read_u16le(body);
      channels = detail::read_u16le(body + 2);
      rate = detail::read_u32le(body + 4);
      bits = detail::read_u16le(body + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data_ptr = body;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_ptr == nullptr)
    throw FormatError("missing fmt/data chunk in " + path);
  if (channels == 0 || rate == 0)
    throw FormatError("bad fmt chunk in " + path);
  if (data_len == 0) throw FormatError("empty data chunk in " + path);

  const bool pcm_int = format == 1;
  const bool ieee_float = format == 3;
  if (!pcm_int && !ieee_float)
    throw FormatError("unsupported WAVE format tag " + std::to_string(format) +
                      " in " + path);
  if (pcm_int && bits != 16 && bits != 24 && bits != 32)
    throw FormatError("unsupported PCM bit depth " + std::to_string(bits) +
                      " in " + path);
  if (ieee_float && bits != 32)
    throw FormatError("unsupported float bit depth " + std::to_string(bits) +
                      " in " + path);

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t n = data_len / bytes_per_sample;

  WavData wav;
  wav.sample_rate = static_cast<int>(rate);
  wav.num_channels = channels;
  wav.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* s = data_ptr + i * bytes_per_sample;
    if (ieee_float) {
      float f;
      std::uint32_t u = detail::read_u32le(s);
      std::memcpy(&f, &u, 4);
      wav.samples[i] = f;
    } else if (bits == 16) {
      auto v = static_cast<std::int16_t>(detail::read_u16le(s));
      wav.samples[i] = v / 32768.0;
    } else if (bits == 24) {
      std::int32_t v = s[0] | (s[1] << 8) | (s[2] << 16);
      if (v & 0x800000) v |= ~0xffffff;
      wav.samples[i] = v / 8388608.0;
    } else {
      auto v = static_cast<std::int32_t>(detail::read_u32le(s));
      wav.samples[i] = v / 2147483648.0;
    }
  }
  return wav;
}

// Writes 16-bit PCM. `samples` are interleaved doubles in [-1, 1]; values
// outside that range are clipped.
inline void write_wav_pcm16(const std::string& path,
                            const std::vector<double>& samples,
                            int sample_rate, int num_channels = 1) {
  if (num_channels < 1 || sample_rate < 1)
    throw ValidationError("write_wav_pcm16: bad rate/channels");
  std::vector<std::uint8_t> out;
  out.reserve(44 + samples.size() * 2);
  std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 2);
  auto put_tag = [&out](const char* t) {
    out.insert(out.end(), t, t + 4);
  };
  put_tag("RIFF");
  detail::put_u32le(out, 36 + data_len);
  put_tag("WAVE");
  put_tag("fmt ");
  detail::put_u32le(out, 16);
  detail::put_u16le(out, 1);  // PCM
  detail::put_u16le(out, static_cast<std::uint16_t>(num_channels));
  detail::put_u32le(out, static_cast<std::uint32_t>(sample_rate));
  detail::put_u32le(out,
                    static_cast<std::uint32_t>(sample_rate * num_channels * 2));
  detail::put_u16le(out, static_cast<std::uint16_t>(num_channels * 2));
  detail::put_u16le(out, 16);
  put_tag("data");
  detail::put_u32le(out, data_len);
  for (double s : samples) {
    double clipped = std::clamp(s, -1.0, 1.0);
    auto v = static_cast<std::int16_t>(std::lround(clipped * 32767.0));
    detail::put_u16le(out, static_cast<std::uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write audio file: " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace vove
