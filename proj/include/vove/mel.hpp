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

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "vove/audio.hpp"
#include "vove/error.hpp"

namespace vove {

// Front-end settings for the log-Mel input x. Defaults are the conventional
// ones for TDNN-family speaker encoders.
struct FrontendConfig {
  int sample_rate = 16000;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int n_mels = 80;
  int fft_size = 512;
  double log_floor = 1e-10;
  // Per-mel-bin mean subtraction over the utterance (off by default).
  bool mean_normalize = false;

  int window_samples() const {
    return static_cast<int>(std::lround(sample_rate * window_ms / 1000.0));
  }
  int hop_samples() const {
    return static_cast<int>(std::lround(sample_rate * hop_ms / 1000.0));
  }

  void validate() const {
    if (sample_rate < 1) throw ValidationError("frontend: bad sample_rate");
    if (window_ms < hop_ms)
      throw ValidationError("frontend: window_ms must be >= hop_ms");
    if (n_mels < 1) throw ValidationError("frontend: n_mels must be >= 1");
    if (!(log_floor > 0.0))
      throw ValidationError("frontend: log_floor must be > 0");
    if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0)
      throw ValidationError("frontend: fft_size must be a power of two");
    if (window_samples() > fft_size)
      throw ValidationError("frontend: window longer than fft_size");
    if (hop_samples() < 1) throw ValidationError("frontend: hop too small");
  }
};

// The classifier input x: one row per frame, one column per mel bin.
struct LogMelSpectrogram {
  Eigen::MatrixXd frames;  // T x n_mels
  FrontendConfig config;

  std::int64_t num_frames() const { return frames.rows(); }
  std::int64_t num_mels() const { return frames.cols(); }
};

namespace detail {

// In-place iterative radix-2 FFT, n a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * 3.141592653589793 / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

inline double hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

}  // namespace detail

// Center frequencies (Hz) of the triangular mel filters spanning [0, sr/2].
inline std::vector<double> mel_filter_centers(const FrontendConfig& cfg) {
  std::vector<double> centers(cfg.n_mels);
  const double mel_max = detail::hz_to_mel(cfg.sample_rate / 2.0);
  for (int m = 0; m < cfg.n_mels; ++m)
    centers[m] = detail::mel_to_hz(mel_max * (m + 1) / (cfg.n_mels + 1));
  return centers;
}

// Triangular filterbank, n_mels x (fft_size/2 + 1), HTK mel scale.
inline Eigen::MatrixXd mel_filterbank(const FrontendConfig& cfg) {
  const int n_bins = cfg.fft_size / 2 + 1;
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(cfg.n_mels, n_bins);
  const double mel_max = detail::hz_to_mel(cfg.sample_rate / 2.0);
  std::vector<double> edges(cfg.n_mels + 2);
  for (int m = 0; m < cfg.n_mels + 2; ++m)
    edges[m] = detail::mel_to_hz(mel_max * m / (cfg.n_mels + 1));
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / cfg.fft_size;
      double w = 0.0;
      if (f > lo && f < mid)
        w = (f - lo) / (mid - lo);
      else if (f == mid)
        w = 1.0;
      else if (f > mid && f < hi)
        w = (hi - f) / (hi - mid);
      fb(m, k) = w;
    }
  }
  return fb;
}

// log-Mel spectrogram of a mono waveform. T = 1 + floor((N - win) / hop);
// each cell is ln(max(mel_power, log_floor)). Periodic Hann analysis window.
inline LogMelSpectrogram log_mel(const Waveform& w, const FrontendConfig& cfg) {
  cfg.validate();
  if (w.sample_rate != cfg.sample_rate)
    throw ShapeError("log_mel: waveform rate " + std::to_string(w.sample_rate) +
                     " != configured rate " + std::to_string(cfg.sample_rate));
  const int win = cfg.window_samples();
  const int hop = cfg.hop_samples();
  const auto n = static_cast<std::int64_t>(w.samples.size());
  if (n < win)
    throw ShapeError("log_mel: waveform of " + std::to_string(n) +
                     " samples is shorter than one window (" +
                     std::to_string(win) + ")");
  const std::int64_t t_frames = 1 + (n - win) / hop;
  const int n_bins = cfg.fft_size / 2 + 1;

  std::vector<double> window(win);
  for (int i = 0; i < win; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * 3.141592653589793 * i / win);

  const Eigen::MatrixXd fb = mel_filterbank(cfg);
  LogMelSpectrogram out;
  out.config = cfg;
  out.frames.resize(t_frames, cfg.n_mels);

  std::vector<std::complex<double>> buf(cfg.fft_size);
  Eigen::VectorXd power(n_bins);
  for (std::int64_t t = 0; t < t_frames; ++t) {
    const std::int64_t start = t * hop;
    for (int i = 0; i < cfg.fft_size; ++i)
      buf[i] = i < win ? w.samples[start + i] * window[i] : 0.0;
    detail::fft_radix2(buf);
    for (int k = 0; k < n_bins; ++k) power[k] = std::norm(buf[k]);
    Eigen::VectorXd mel_power = fb * power;
    for (int m = 0; m < cfg.n_mels; ++m)
      out.frames(t, m) = std::log(std::max(mel_power[m], cfg.log_floor));
  }

  if (cfg.mean_normalize) {
    Eigen::RowVectorXd mean = out.frames.colwise().mean();
    out.frames.rowwise() -= mean;
  }
  return out;
}

}  // namespace vove
