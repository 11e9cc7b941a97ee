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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vove/attributes.hpp"
#include "vove/audio.hpp"
#include "vove/autodiff.hpp"
#include "vove/error.hpp"
#include "vove/mel.hpp"
#include "vove/rng.hpp"
#include "vove/store.hpp"

namespace vove {

// ---------------------------------------------------------------------------
// Configuration.

struct ModelConfig {
  int backbone_channels = 64;   // reference scale uses 512
  int embedding_dim = kNumAttributes;  // fixed
  int n_speakers = 0;           // filled from the manifest
  int svhead_hidden = 192;
  double learning_rate = 1e-4;
  double weight_decay = 0.01;
  int epochs = 30;
  int batch = 8;
  double crop_seconds = 3.0;
  double val_fraction = 0.1;   // 0 switches monitoring to the training loss
  std::uint64_t seed = 0;

  void validate() const {
    if (embedding_dim != static_cast<int>(kNumAttributes))
      throw ValidationError("ModelConfig: embedding_dim is fixed at " +
                            std::to_string(kNumAttributes));
    if (backbone_channels < 8 || backbone_channels % 4 != 0)
      throw ValidationError(
          "ModelConfig: backbone_channels must be >= 8 and divisible by 4");
    if (n_speakers < 1)
      throw ValidationError("ModelConfig: n_speakers must be positive");
    if (svhead_hidden < 1)
      throw ValidationError("ModelConfig: svhead_hidden must be positive");
    if (!(learning_rate > 0.0))
      throw ValidationError("ModelConfig: learning_rate must be > 0");
    if (weight_decay < 0.0)
      throw ValidationError("ModelConfig: weight_decay must be >= 0");
    if (epochs < 0) throw ValidationError("ModelConfig: epochs must be >= 0");
    if (batch < 1) throw ValidationError("ModelConfig: batch must be >= 1");
    if (!(crop_seconds > 0.0))
      throw ValidationError("ModelConfig: crop_seconds must be > 0");
    if (val_fraction < 0.0 || val_fraction >= 1.0)
      throw ValidationError("ModelConfig: val_fraction must lie in [0, 1)");
  }
};

// Bijection between manifest speaker ids and class indices; indices follow
// the sorted id order, so the map is stable for a given speaker set.
class SpeakerIndexMap {
 public:
  SpeakerIndexMap() = default;

  static SpeakerIndexMap from_ids(std::vector<std::string> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    SpeakerIndexMap m;
    m.ids_ = std::move(ids);
    for (std::size_t i = 0; i < m.ids_.size(); ++i)
      m.index_[m.ids_[i]] = static_cast<int>(i);
    return m;
  }

  static SpeakerIndexMap from_manifest(const Manifest& manifest) {
    std::vector<std::string> ids;
    for (const auto& r : manifest.records) ids.push_back(r.speaker_id);
    return from_ids(std::move(ids));
  }

  int index_of(const std::string& speaker_id) const {
    auto it = index_.find(speaker_id);
    if (it == index_.end())
      throw ValidationError("unknown speaker '" + speaker_id + "'");
    return it->second;
  }

  const std::string& id_of(int index) const {
    if (index < 0 || index >= static_cast<int>(ids_.size()))
      throw ValidationError("speaker index out of range");
    return ids_[static_cast<std::size_t>(index)];
  }

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
  std::map<std::string, int> index_;
};

// ---------------------------------------------------------------------------
// Model state.

struct ParamTensor {
  std::string name;
  Eigen::MatrixXd value;
};

struct BnBuffer {
  std::string name;
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

struct ModelState {
  ModelConfig config;
  int n_mels = 0;
  SpeakerIndexMap speakers;
  std::vector<ParamTensor> params;
  std::vector<BnBuffer> bn_buffers;
  // AdamW state, aligned with `params`.
  std::vector<Eigen::MatrixXd> adam_m;
  std::vector<Eigen::MatrixXd> adam_v;
  std::int64_t adam_step = 0;
  int epoch = 0;

  ParamTensor& param(const std::string& name) {
    for (auto& p : params)
      if (p.name == name) return p;
    throw ValidationError("no parameter named '" + name + "'");
  }
  BnBuffer& bn(const std::string& name) {
    for (auto& b : bn_buffers)
      if (b.name == name) return b;
    throw ValidationError("no batch-norm buffer named '" + name + "'");
  }
};

namespace detail {

inline constexpr std::uint64_t kInitStream = 100;
inline constexpr std::uint64_t kSplitStream = 101;
inline constexpr std::uint64_t kEpochStreamBase = 200;

inline int se_hidden(int channels) { return std::max(2, channels / 4); }
inline int attention_input(int channels) { return 3 * channels / 2; }
inline int attention_hidden(int channels) {
  return std::max(4, attention_input(channels) / 8);
}
inline constexpr double kPoolingEps = 1e-6;
inline constexpr int kRes2Scale = 4;

}  // namespace detail

// Seeded initialization: weights U(-sqrt(1/fan_in), sqrt(1/fan_in)) with
// fan_in the tensor's column count, biases zero, batch-norm scale one /
// shift zero. Tensor registration order is fixed, so one seed fully
// determines every parameter.
inline ModelState init_model(const ModelConfig& cfg, int n_mels,
                             SpeakerIndexMap speakers) {
  cfg.validate();
  if (n_mels < 1) throw ValidationError("init_model: n_mels must be >= 1");
  if (speakers.size() != static_cast<std::size_t>(cfg.n_speakers))
    throw ValidationError("init_model: speaker map size " +
                          std::to_string(speakers.size()) +
                          " != n_speakers " + std::to_string(cfg.n_speakers));
  ModelState m;
  m.config = cfg;
  m.n_mels = n_mels;
  m.speakers = std::move(speakers);

  Pcg32 rng(cfg.seed, detail::kInitStream);
  auto weight = [&m, &rng](const std::string& name, int rows, int cols) {
    Eigen::MatrixXd w(rows, cols);
    const double bound = std::sqrt(1.0 / static_cast<double>(cols));
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
    m.params.push_back({name, std::move(w)});
  };
  auto bias = [&m](const std::string& name, int rows) {
    m.params.push_back({name, Eigen::MatrixXd::Zero(rows, 1)});
  };
  auto norm = [&m](const std::string& name, int channels) {
    m.params.push_back({name + ".gamma", Eigen::MatrixXd::Ones(channels, 1)});
    m.params.push_back({name + ".beta", Eigen::MatrixXd::Zero(channels, 1)});
    m.bn_buffers.push_back({name, Eigen::VectorXd::Zero(channels),
                            Eigen::VectorXd::Ones(channels)});
  };

  const int C = cfg.backbone_channels;
  const int sub = C / detail::kRes2Scale;
  weight("stem.w", C, n_mels * 5);
  bias("stem.b", C);
  norm("stem.bn", C);
  for (int b = 0; b < 3; ++b) {
    const std::string p = "block" + std::to_string(b + 1);
    weight(p + ".in.w", C, C);
    bias(p + ".in.b", C);
    norm(p + ".in.bn", C);
    for (int j = 1; j < detail::kRes2Scale; ++j) {
      weight(p + ".res2." + std::to_string(j) + ".w", sub, sub * 3);
      bias(p + ".res2." + std::to_string(j) + ".b", sub);
    }
    norm(p + ".mid.bn", C);
    weight(p + ".out.w", C, C);
    bias(p + ".out.b", C);
    norm(p + ".out.bn", C);
    weight(p + ".se.fc1.w", detail::se_hidden(C), C);
    bias(p + ".se.fc1.b", detail::se_hidden(C));
    weight(p + ".se.fc2.w", C, detail::se_hidden(C));
    bias(p + ".se.fc2.b", C);
  }
  const int attn_in = detail::attention_input(C);
  const int attn_hidden = detail::attention_hidden(C);
  weight("cat.w", attn_in, 3 * C);
  bias("cat.b", attn_in);
  weight("att.fc1.w", attn_hidden, attn_in);
  bias("att.fc1.b", attn_hidden);
  weight("att.fc2.w", attn_in, attn_hidden);
  bias("att.fc2.b", attn_in);
  norm("pooled.bn", 2 * attn_in);
  weight("head.w", static_cast<int>(kNumAttributes), 2 * attn_in);
  bias("head.b", static_cast<int>(kNumAttributes));
  weight("sv.fc1.w", cfg.svhead_hidden, static_cast<int>(kNumAttributes));
  bias("sv.fc1.b", cfg.svhead_hidden);
  norm("sv.bn", cfg.svhead_hidden);
  weight("sv.fc2.w", cfg.n_speakers, cfg.svhead_hidden);
  bias("sv.fc2.b", cfg.n_speakers);

  m.adam_m.reserve(m.params.size());
  m.adam_v.reserve(m.params.size());
  for (const auto& p : m.params) {
    m.adam_m.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
    m.adam_v.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Forward pass on the tape.

struct ForwardNodes {
  int attr_logits = -1;  // batch of 44 x 1 columns (pre-sigmoid)
  int spk_logits = -1;   // batch of n_speakers x 1 columns (pre-softmax)
  std::vector<int> param_ids;  // tape leaves aligned with state.params
};

// Builds the network graph for a batch of mel inputs (items are
// n_mels x T, T >= 1, ragged lengths allowed). Training mode uses batch
// statistics in every batch norm and advances the running buffers; eval mode
// freezes them, making each item's output independent of the rest of the
// batch.
inline ForwardNodes model_forward(ad::Tape& t, ModelState& m,
                                  const ad::Batch& feats, bool training) {
  if (feats.empty()) throw ShapeError("model_forward: empty batch");
  for (const auto& f : feats) {
    if (f.rows() != m.n_mels)
      throw ShapeError("model_forward: expected " + std::to_string(m.n_mels) +
                       " mel rows, got " + std::to_string(f.rows()));
    if (f.cols() < 1) throw ShapeError("model_forward: empty spectrogram");
  }

  ForwardNodes out;
  std::map<std::string, int> ids;
  out.param_ids.reserve(m.params.size());
  for (const auto& p : m.params) {
    int id = t.leaf(ad::Batch{p.value}, training);
    ids[p.name] = id;
    out.param_ids.push_back(id);
  }
  auto bn_apply = [&](int x, const std::string& name) {
    BnBuffer& buf = m.bn(name);
    return ad::batchnorm(t, x, ids.at(name + ".gamma"), ids.at(name + ".beta"),
                         buf.mean, buf.var, training);
  };
  auto fc = [&](int x, const std::string& stem) {
    return ad::add_bias(t, ad::matmul(t, ids.at(stem + ".w"), x),
                        ids.at(stem + ".b"));
  };

  const int C = m.config.backbone_channels;
  const int sub = C / detail::kRes2Scale;

  int x = t.leaf(feats, false);
  int h = ad::conv1d(t, x, ids.at("stem.w"), ids.at("stem.b"), 5, 1);
  h = bn_apply(ad::relu(t, h), "stem.bn");

  std::vector<int> block_outputs;
  const int dilations[3] = {2, 3, 4};
  for (int b = 0; b < 3; ++b) {
    const std::string p = "block" + std::to_string(b + 1);
    int inner = ad::conv1d(t, h, ids.at(p + ".in.w"), ids.at(p + ".in.b"), 1,
                           1);
    inner = bn_apply(ad::relu(t, inner), p + ".in.bn");
    // Res2: the first sub-band passes through; each later band is convolved
    // after summing with the previous band's output.
    std::vector<int> bands;
    int prev = ad::slice_rows(t, inner, 0, sub);
    bands.push_back(prev);
    for (int j = 1; j < detail::kRes2Scale; ++j) {
      int band = ad::slice_rows(t, inner, j * sub, sub);
      int mixed = ad::add(t, band, prev);
      prev = ad::conv1d(t, mixed, ids.at(p + ".res2." + std::to_string(j) +
                                         ".w"),
                        ids.at(p + ".res2." + std::to_string(j) + ".b"), 3,
                        dilations[b]);
      bands.push_back(prev);
    }
    int mid = bn_apply(ad::relu(t, ad::concat_rows(t, bands)), p + ".mid.bn");
    int outc = ad::conv1d(t, mid, ids.at(p + ".out.w"), ids.at(p + ".out.b"),
                          1, 1);
    outc = bn_apply(ad::relu(t, outc), p + ".out.bn");
    // Squeeze-excitation gate from the time-averaged channel profile.
    int squeeze = ad::row_mean(t, outc);
    int gate = ad::sigmoid(
        t, fc(ad::relu(t, fc(squeeze, p + ".se.fc1")), p + ".se.fc2"));
    int scaled = ad::broadcast_mul_cols(t, outc, gate);
    h = ad::add(t, h, scaled);  // residual keeps gradients flowing early on
    block_outputs.push_back(h);
  }

  int cat = ad::concat_rows(t, block_outputs);
  int feats_attn = ad::relu(t, fc(cat, "cat"));

  // Channel-dependent attentive statistics pooling: per-channel softmax
  // weights over time, then weighted mean and standard deviation.
  int scores = fc(ad::tanh_op(t, fc(feats_attn, "att.fc1")), "att.fc2");
  int alpha = ad::softmax_time(t, scores);
  int mu = ad::row_sum(t, ad::mul(t, feats_attn, alpha));
  int m2 = ad::row_sum(
      t, ad::mul(t, ad::mul(t, feats_attn, feats_attn), alpha));
  int var = ad::sub(t, m2, ad::mul(t, mu, mu));
  int sd = ad::sqrt_eps(t, var, detail::kPoolingEps);
  int pooled = bn_apply(ad::concat_rows(t, {mu, sd}), "pooled.bn");

  out.attr_logits = fc(pooled, "head");

  // Speaker-verification head over the pre-sigmoid attribute logits.
  int sv = fc(ad::relu(t, out.attr_logits), "sv.fc1");
  sv = bn_apply(sv, "sv.bn");
  out.spk_logits = fc(sv, "sv.fc2");
  return out;
}

// ---------------------------------------------------------------------------
// Losses.

// Appends the combined loss to the tape: multi-label BCE on the attribute
// logits plus speaker cross-entropy, weighted 1:1.
inline int total_loss_node(ad::Tape& t, const ForwardNodes& fwd,
                           const std::vector<Eigen::VectorXd>& targets,
                           const std::vector<int>& speaker_indices) {
  int bce = ad::bce_with_logits(t, fwd.attr_logits, targets);
  int ce = ad::softmax_cross_entropy(t, fwd.spk_logits, speaker_indices);
  return ad::add(t, bce, ce);
}

// Standalone loss kernels on raw logit values (no tape), for reporting and
// for checking the decomposition of the combined loss.
inline double bce_term(const ad::Batch& attr_logits,
                       const std::vector<Eigen::VectorXd>& targets) {
  if (attr_logits.size() != targets.size())
    throw ShapeError("bce_term: batch size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < attr_logits.size(); ++i)
    for (Eigen::Index j = 0; j < attr_logits[i].rows(); ++j) {
      const double l = attr_logits[i](j, 0), y = targets[i](j);
      total += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::fabs(l)));
    }
  return total / static_cast<double>(attr_logits.size());
}

inline double ce_term(const ad::Batch& spk_logits,
                      const std::vector<int>& speaker_indices) {
  if (spk_logits.size() != speaker_indices.size())
    throw ShapeError("ce_term: batch size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < spk_logits.size(); ++i) {
    const int s = speaker_indices[i];
    if (s < 0 || s >= spk_logits[i].rows())
      throw ValidationError("ce_term: speaker index out of range");
    const double mx = spk_logits[i].maxCoeff();
    total += mx + std::log((spk_logits[i].array() - mx).exp().sum()) -
             spk_logits[i](s, 0);
  }
  return total / static_cast<double>(spk_logits.size());
}

// ---------------------------------------------------------------------------
// Embedding.

// v = sigmoid(f(x)) for one utterance in the inference regime.
inline AttributeVector vove_embed(ModelState& m,
                                  const LogMelSpectrogram& spec) {
  ad::Tape t;
  ad::Batch feats{spec.frames.transpose()};
  auto fwd = model_forward(t, m, feats, false);
  const Eigen::MatrixXd& logits = t.value(fwd.attr_logits)[0];
  AttributeVector v;
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    double s =
        ad::detail::stable_sigmoid(logits(static_cast<Eigen::Index>(i), 0));
    // Keep the output strictly inside (0,1) even for saturated logits.
    if (s >= 1.0) s = std::nextafter(1.0, 0.0);
    if (s <= 0.0) s = std::nextafter(0.0, 1.0);
    v.values[i] = s;
  }
  return v;
}

// ---------------------------------------------------------------------------
// AdamW.

inline void adamw_step(ModelState& m,
                       const std::vector<Eigen::MatrixXd>& grads) {
  if (grads.size() != m.params.size())
    throw ShapeError("adamw_step: gradient count mismatch");
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  const double lr = m.config.learning_rate;
  const double wd = m.config.weight_decay;
  ++m.adam_step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(m.adam_step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(m.adam_step));
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    auto& p = m.params[i].value;
    m.adam_m[i] = beta1 * m.adam_m[i] + (1.0 - beta1) * grads[i];
    m.adam_v[i] =
        beta2 * m.adam_v[i] + (1.0 - beta2) * grads[i].cwiseProduct(grads[i]);
    Eigen::ArrayXXd mhat = m.adam_m[i].array() / bc1;
    Eigen::ArrayXXd vhat = m.adam_v[i].array() / bc2;
    p.array() -= lr * (mhat / (vhat.sqrt() + eps) + wd * p.array());
  }
}

// ---------------------------------------------------------------------------
// Training.

struct EpochLog {
  int epoch = 0;              // 0 is the pre-training measurement
  double train_loss = 0.0;
  double val_loss = 0.0;      // NaN when no validation split exists
};

struct TrainResult {
  ModelState state;
  std::vector<EpochLog> log;
};

namespace detail {

struct TrainItem {
  std::string utterance_id;
  Eigen::MatrixXd feats;  // n_mels x T
  Eigen::VectorXd target;
  int speaker = 0;
};

// Mean combined loss over `indices`, inference regime, full-length inputs.
inline double dataset_loss(ModelState& m,
                           const std::vector<TrainItem>& items,
                           const std::vector<std::size_t>& indices,
                           int batch_size) {
  if (indices.empty())
    return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (std::size_t at = 0; at < indices.size();
       at += static_cast<std::size_t>(batch_size)) {
    const std::size_t n = std::min(static_cast<std::size_t>(batch_size),
                                   indices.size() - at);
    ad::Batch feats;
    std::vector<Eigen::VectorXd> targets;
    std::vector<int> speakers;
    for (std::size_t k = 0; k < n; ++k) {
      const TrainItem& it = items[indices[at + k]];
      feats.push_back(it.feats);
      targets.push_back(it.target);
      speakers.push_back(it.speaker);
    }
    ad::Tape t;
    auto fwd = model_forward(t, m, feats, false);
    const double bce = bce_term(t.value(fwd.attr_logits), targets);
    const double ce = ce_term(t.value(fwd.spk_logits), speakers);
    total += (bce + ce) * static_cast<double>(n);
  }
  return total / static_cast<double>(indices.size());
}

// Random fixed-length crop in feature space; shorter inputs are padded on
// the right with the log floor (the value silence maps to).
inline Eigen::MatrixXd crop_features(const Eigen::MatrixXd& feats,
                                     int crop_frames, double pad_value,
                                     Pcg32& rng) {
  const Eigen::Index T = feats.cols();
  if (T >= crop_frames) {
    const std::uint32_t span =
        static_cast<std::uint32_t>(T - crop_frames + 1);
    const Eigen::Index start = rng.below(span);
    return feats.middleCols(start, crop_frames);
  }
  Eigen::MatrixXd out =
      Eigen::MatrixXd::Constant(feats.rows(), crop_frames, pad_value);
  out.leftCols(T) = feats;
  return out;
}

}  // namespace detail

// Trains on log-mel features computed from the manifest's audio. Per-speaker
// soft labels are inherited by each of the speaker's utterances. Returns the
// state restored to the best epoch by monitored loss (validation loss when a
// split exists, else training loss) plus the per-epoch loss log, whose first
// row (epoch 0) measures the seeded initialization.
inline TrainResult train(const Manifest& manifest,
                         const std::map<std::string, AttributeVector>& labels,
                         const ModelConfig& config,
                         const FrontendConfig& frontend,
                         const std::string& audio_root = "") {
  ModelConfig cfg = config;
  frontend.validate();
  if (manifest.records.empty())
    throw ValidationError("train: empty manifest");
  manifest.validate();

  auto speakers = SpeakerIndexMap::from_manifest(manifest);
  std::vector<std::string> unlabeled;
  for (const auto& id : speakers.ids())
    if (labels.find(id) == labels.end()) unlabeled.push_back(id);
  if (!unlabeled.empty()) {
    std::string msg = "train: no soft label for speaker(s):";
    for (const auto& id : unlabeled) msg += " " + id;
    throw ValidationError(msg);
  }
  cfg.n_speakers = static_cast<int>(speakers.size());
  cfg.validate();

  // Features for every utterance, loaded once.
  std::vector<detail::TrainItem> items;
  items.reserve(manifest.records.size());
  for (const auto& r : manifest.records) {
    std::string path = r.audio_path;
    if (!audio_root.empty() &&
        !std::filesystem::path(path).is_absolute())
      path = (std::filesystem::path(audio_root) / path).string();
    Waveform w = load_audio(path, frontend.sample_rate);
    LogMelSpectrogram spec = log_mel(w, frontend);
    detail::TrainItem item;
    item.utterance_id = r.utterance_id;
    item.feats = spec.frames.transpose();
    const AttributeVector& label = labels.at(r.speaker_id);
    item.target = Eigen::Map<const Eigen::VectorXd>(
        label.values.data(), static_cast<Eigen::Index>(kNumAttributes));
    item.speaker = speakers.index_of(r.speaker_id);
    items.push_back(std::move(item));
  }

  // Stratified validation split: per speaker (sorted order), a seeded
  // shuffle donates floor(val_fraction * n) utterances to validation.
  std::vector<std::size_t> train_idx, val_idx;
  {
    std::map<int, std::vector<std::size_t>> by_speaker;
    for (std::size_t i = 0; i < items.size(); ++i)
      by_speaker[items[i].speaker].push_back(i);
    Pcg32 split_rng(cfg.seed, detail::kSplitStream);
    for (auto& [spk, idx] : by_speaker) {
      split_rng.shuffle(idx);
      const std::size_t n_val = static_cast<std::size_t>(
          cfg.val_fraction * static_cast<double>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k)
        (k < n_val ? val_idx : train_idx).push_back(idx[k]);
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
  }

  TrainResult result;
  result.state = init_model(cfg, frontend.n_mels, speakers);
  ModelState& m = result.state;

  const int crop_frames = std::max(
      1, static_cast<int>(std::llround(cfg.crop_seconds * 1000.0 /
                                       frontend.hop_ms)));
  const double pad_value = std::log(frontend.log_floor);
  const bool has_val = !val_idx.empty();

  auto log_epoch = [&](int epoch) {
    EpochLog row;
    row.epoch = epoch;
    row.train_loss = detail::dataset_loss(m, items, train_idx, cfg.batch);
    row.val_loss = has_val
                       ? detail::dataset_loss(m, items, val_idx, cfg.batch)
                       : std::numeric_limits<double>::quiet_NaN();
    result.log.push_back(row);
    return has_val ? row.val_loss : row.train_loss;
  };

  double best_loss = log_epoch(0);
  auto best_params = m.params;
  auto best_buffers = m.bn_buffers;
  int best_epoch = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Pcg32 rng(cfg.seed,
              detail::kEpochStreamBase + static_cast<std::uint64_t>(epoch));
    std::vector<std::size_t> order = train_idx;
    rng.shuffle(order);
    for (std::size_t at = 0; at < order.size();
         at += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t n = std::min(static_cast<std::size_t>(cfg.batch),
                                     order.size() - at);
      ad::Batch feats;
      std::vector<Eigen::VectorXd> targets;
      std::vector<int> spk;
      for (std::size_t k = 0; k < n; ++k) {
        const detail::TrainItem& it = items[order[at + k]];
        feats.push_back(
            detail::crop_features(it.feats, crop_frames, pad_value, rng));
        targets.push_back(it.target);
        spk.push_back(it.speaker);
      }
      ad::Tape t;
      auto fwd = model_forward(t, m, feats, true);
      int loss = total_loss_node(t, fwd, targets, spk);
      t.backward(loss);
      std::vector<Eigen::MatrixXd> grads;
      grads.reserve(m.params.size());
      for (int id : fwd.param_ids) grads.push_back(t.grad_mut(id)[0]);
      adamw_step(m, grads);
    }
    m.epoch = epoch;
    const double monitored = log_epoch(epoch);
    if (monitored < best_loss) {
      best_loss = monitored;
      best_params = m.params;
      best_buffers = m.bn_buffers;
      best_epoch = epoch;
    }
  }

  m.params = std::move(best_params);
  m.bn_buffers = std::move(best_buffers);
  m.epoch = best_epoch;
  return result;
}

// Training log file: "VOVETRAINLOG 1", then `epoch  train_loss  val_loss`
// per line ("-" when no validation split exists).
inline constexpr const char* kTrainLogMagic = "VOVETRAINLOG 1";

inline void write_train_log(const std::vector<EpochLog>& log,
                            const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << kTrainLogMagic << "\n";
  char buf[64];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof(buf), "%.6f", row.train_loss);
    os << row.epoch << '\t' << buf << '\t';
    if (std::isnan(row.val_loss)) {
      os << '-';
    } else {
      std::snprintf(buf, sizeof(buf), "%.6f", row.val_loss);
      os << buf;
    }
    os << '\n';
  }
  if (!os.flush()) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Extraction.

struct ExtractFailure {
  std::string utterance_id;
  std::string message;
};

struct ExtractResult {
  EmbeddingStore store;
  std::vector<ExtractFailure> failures;
};

// Embeds every manifest utterance at full length in the inference regime.
// Per-utterance audio failures are collected rather than fatal, so a partial
// store plus its failure list comes back. Stored components are nudged into
// the open interval (0,1): float rounding would otherwise let saturated
// sigmoids hit exactly 0 or 1.
inline ExtractResult extract(const Manifest& manifest, ModelState& m,
                             const FrontendConfig& frontend,
                             const std::string& audio_root = "") {
  frontend.validate();
  manifest.validate();
  if (frontend.n_mels != m.n_mels)
    throw ValidationError("extract: frontend mel count " +
                          std::to_string(frontend.n_mels) +
                          " != model mel count " + std::to_string(m.n_mels));
  ExtractResult result;
  result.store.header.model_id = std::string(kVoveModelId);
  result.store.header.dim = static_cast<int>(kNumAttributes);
  for (const auto& r : manifest.records) {
    try {
      std::string path = r.audio_path;
      if (!audio_root.empty() &&
          !std::filesystem::path(path).is_absolute())
        path = (std::filesystem::path(audio_root) / path).string();
      Waveform w = load_audio(path, frontend.sample_rate);
      LogMelSpectrogram spec = log_mel(w, frontend);
      AttributeVector v = vove_embed(m, spec);
      std::vector<float> fv(kNumAttributes);
      for (std::size_t i = 0; i < kNumAttributes; ++i) {
        float x = static_cast<float>(v.values[i]);
        if (x >= 1.0f) x = std::nextafter(1.0f, 0.0f);
        if (x <= 0.0f) x = std::nextafter(0.0f, 1.0f);
        fv[i] = x;
      }
      result.store.records.push_back(
          EmbeddingRecord{r.utterance_id, std::move(fv)});
    } catch (const Error& e) {
      result.failures.push_back(ExtractFailure{r.utterance_id, e.what()});
    }
  }
  result.store.rebuild_index();
  result.store.validate();
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints: "VOVECKPT 1" line, one JSON header line (config, speaker ids,
// schema hash, tensor directory), then raw little-endian float64 tensor data
// in directory order: parameters, batch-norm buffers (mean then var), AdamW
// moments (m then v).

inline constexpr const char* kCheckpointMagic = "VOVECKPT 1";

namespace detail {

inline void write_f64(std::ostream& os, const double* data, std::size_t n) {
  static_assert(sizeof(double) == 8);
  os.write(reinterpret_cast<const char*>(data),
           static_cast<std::streamsize>(n * sizeof(double)));
}

inline void read_f64(std::istream& is, double* data, std::size_t n,
                     const char* what) {
  is.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (static_cast<std::size_t>(is.gcount()) != n * sizeof(double))
    throw ParseError(std::string("checkpoint truncated while reading ") +
                         what,
                     0);
}

}  // namespace detail

inline void save_checkpoint(const ModelState& m, const std::string& path) {
  nlohmann::json header;
  header["config"] = {
      {"backbone_channels", m.config.backbone_channels},
      {"embedding_dim", m.config.embedding_dim},
      {"n_speakers", m.config.n_speakers},
      {"svhead_hidden", m.config.svhead_hidden},
      {"learning_rate", m.config.learning_rate},
      {"weight_decay", m.config.weight_decay},
      {"epochs", m.config.epochs},
      {"batch", m.config.batch},
      {"crop_seconds", m.config.crop_seconds},
      {"val_fraction", m.config.val_fraction},
      {"seed", m.config.seed},
  };
  header["n_mels"] = m.n_mels;
  header["schema"] = schema_hash_hex();
  header["speakers"] = m.speakers.ids();
  header["epoch"] = m.epoch;
  header["adam_step"] = m.adam_step;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : m.params)
    tensors.push_back({{"name", p.name},
                       {"rows", p.value.rows()},
                       {"cols", p.value.cols()}});
  header["params"] = tensors;
  nlohmann::json buffers = nlohmann::json::array();
  for (const auto& b : m.bn_buffers)
    buffers.push_back({{"name", b.name}, {"size", b.mean.size()}});
  header["bn_buffers"] = buffers;

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << kCheckpointMagic << "\n" << header.dump() << "\n";
  for (const auto& p : m.params)
    detail::write_f64(os, p.value.data(),
                      static_cast<std::size_t>(p.value.size()));
  for (const auto& b : m.bn_buffers) {
    detail::write_f64(os, b.mean.data(),
                      static_cast<std::size_t>(b.mean.size()));
    detail::write_f64(os, b.var.data(),
                      static_cast<std::size_t>(b.var.size()));
  }
  for (const auto& t : m.adam_m)
    detail::write_f64(os, t.data(), static_cast<std::size_t>(t.size()));
  for (const auto& t : m.adam_v)
    detail::write_f64(os, t.data(), static_cast<std::size_t>(t.size()));
  if (!os.flush()) throw IoError("failed writing '" + path + "'");
}

inline ModelState load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint '" + path + "'");
  std::string line;
  if (!std::getline(is, line) || line != kCheckpointMagic)
    throw FormatError("checkpoint: missing '" +
                      std::string(kCheckpointMagic) + "' header");
  if (!std::getline(is, line))
    throw FormatError("checkpoint: missing JSON header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad JSON header: ") +
                      e.what());
  }
  try {
    if (header.at("schema").get<std::string>() != schema_hash_hex())
      throw FormatError(
          "checkpoint: attribute schema hash mismatch; file was written "
          "against a different attribute set");
    ModelConfig cfg;
    const auto& jc = header.at("config");
    cfg.backbone_channels = jc.at("backbone_channels").get<int>();
    cfg.embedding_dim = jc.at("embedding_dim").get<int>();
    cfg.n_speakers = jc.at("n_speakers").get<int>();
    cfg.svhead_hidden = jc.at("svhead_hidden").get<int>();
    cfg.learning_rate = jc.at("learning_rate").get<double>();
    cfg.weight_decay = jc.at("weight_decay").get<double>();
    cfg.epochs = jc.at("epochs").get<int>();
    cfg.batch = jc.at("batch").get<int>();
    cfg.crop_seconds = jc.at("crop_seconds").get<double>();
    cfg.val_fraction = jc.at("val_fraction").get<double>();
    cfg.seed = jc.at("seed").get<std::uint64_t>();
    auto speakers = SpeakerIndexMap::from_ids(
        header.at("speakers").get<std::vector<std::string>>());
    ModelState m = init_model(cfg, header.at("n_mels").get<int>(), speakers);
    m.epoch = header.at("epoch").get<int>();
    m.adam_step = header.at("adam_step").get<std::int64_t>();

    const auto& jp = header.at("params");
    if (jp.size() != m.params.size())
      throw FormatError("checkpoint: parameter directory size mismatch");
    for (std::size_t i = 0; i < m.params.size(); ++i) {
      const auto& e = jp[i];
      if (e.at("name").get<std::string>() != m.params[i].name ||
          e.at("rows").get<Eigen::Index>() != m.params[i].value.rows() ||
          e.at("cols").get<Eigen::Index>() != m.params[i].value.cols())
        throw FormatError("checkpoint: tensor directory mismatch at '" +
                          m.params[i].name + "'");
    }
    const auto& jb = header.at("bn_buffers");
    if (jb.size() != m.bn_buffers.size())
      throw FormatError("checkpoint: buffer directory size mismatch");
    for (std::size_t i = 0; i < m.bn_buffers.size(); ++i) {
      const auto& e = jb[i];
      if (e.at("name").get<std::string>() != m.bn_buffers[i].name ||
          e.at("size").get<Eigen::Index>() != m.bn_buffers[i].mean.size())
        throw FormatError("checkpoint: buffer directory mismatch at '" +
                          m.bn_buffers[i].name + "'");
    }

    for (auto& p : m.params)
      detail::read_f64(is, p.value.data(),
                       static_cast<std::size_t>(p.value.size()),
                       p.name.c_str());
    for (auto& b : m.bn_buffers) {
      detail::read_f64(is, b.mean.data(),
                       static_cast<std::size_t>(b.mean.size()),
                       b.name.c_str());
      detail::read_f64(is, b.var.data(),
                       static_cast<std::size_t>(b.var.size()),
                       b.name.c_str());
    }
    for (auto& t : m.adam_m)
      detail::read_f64(is, t.data(), static_cast<std::size_t>(t.size()),
                       "adam m");
    for (auto& t : m.adam_v)
      detail::read_f64(is, t.data(), static_cast<std::size_t>(t.size()),
                       "adam v");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed header field: ") +
                      e.what());
  }
}

}  // namespace vove
