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

#include <cmath>
#include <string>
#include <vector>

#include "vove/error.hpp"
#include "vove/wav.hpp"

namespace vove {

// Mono audio at a known rate.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;
};

namespace detail {

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  double px = 3.141592653589793 * x;
  return std::sin(px) / px;
}

}  // namespace detail

// Windowed-sinc resampler (Hann window, 16-tap half width, kernel stretched
// by the cutoff when downsampling). Deterministic; identical rates pass
// through untouched.
inline Waveform resample(const Waveform& in, int target_rate) {
  if (target_rate < 1) throw ValidationError("resample: bad target rate");
  if (in.sample_rate < 1) throw ValidationError("resample: bad source rate");
  if (in.sample_rate == target_rate) return in;

  const double ratio = static_cast<double>(target_rate) / in.sample_rate;
  const double cutoff = std::min(1.0, ratio);
  const int half_taps = 16;
  const double half_width = half_taps / cutoff;
  const auto n_in = static_cast<std::int64_t>(in.samples.size());
  const auto n_out = static_cast<std::int64_t>(
      std::llround(static_cast<double>(n_in) * ratio));

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(std::max<std::int64_t>(n_out, 0)));
  for (std::int64_t j = 0; j < n_out; ++j) {
    const double center = j / ratio;
    const auto k_lo =
        static_cast<std::int64_t>(std::ceil(center - half_width));
    const auto k_hi =
        static_cast<std::int64_t>(std::floor(center + half_width));
    double acc = 0.0;
    for (std::int64_t k = std::max<std::int64_t>(k_lo, 0);
         k <= std::min(k_hi, n_in - 1); ++k) {
      const double t = center - k;
      const double window =
          0.5 + 0.5 * std::cos(3.141592653589793 * t / half_width);
      acc += in.samples[static_cast<std::size_t>(k)] * cutoff *
             detail::sinc(cutoff * t) * window;
    }
    out.samples[static_cast<std::size_t>(j)] = acc;
  }
  return out;
}

// Collapses interleaved channels to mono by per-frame channel mean.
inline Waveform to_mono(const WavData& wav) {
  Waveform out;
  out.sample_rate = wav.sample_rate;
  const std::size_t frames = wav.frames();
  out.samples.resize(frames);
  if (wav.num_channels == 1) {
    out.samples = wav.samples;
    return out;
  }
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < wav.num_channels; ++c)
      acc += wav.samples[f * wav.num_channels + c];
    out.samples[f] = acc / wav.num_channels;
  }
  return out;
}

// Decode + downmix + resample in one step: the classifier's audio entry point.
inline Waveform load_audio(const std::string& path, int target_rate) {
  WavData wav = read_wav(path);
  return resample(to_mono(wav), target_rate);
}

}  // namespace vove
