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
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vove/error.hpp"
#include "vove/rng.hpp"
#include "vove/store.hpp"

namespace vove {

// Threshold binarization: indices with v_i >= tau (inclusive comparison).
template <typename Seq>
std::vector<std::size_t> binarize(const Seq& values, double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw ValidationError("binarize: tau must lie in (0,1), got " +
                          std::to_string(tau));
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (static_cast<double>(values[i]) >= tau) out.push_back(i);
  return out;
}

inline std::vector<std::size_t> binarize(const AttributeVector& v, double tau) {
  return binarize(v.values, tau);
}

struct MeanStd {
  double mean = 0.0;
  double std_dev = 0.0;  // population standard deviation
  std::size_t n_used = 0;
  std::size_t n_skipped = 0;
};

// Threshold-binarized multi-label scores, reported as mean +/- std over
// evaluation samples.
struct ClassificationScores {
  double tau = 0.0;
  MeanStd precision;
  MeanStd recall;
  MeanStd f1;
};

namespace detail {

inline MeanStd mean_std(const std::vector<double>& xs, std::size_t skipped,
                        const char* what) {
  if (xs.empty())
    throw ValidationError(std::string("prf1: every sample was skipped for ") +
                          what + "; inputs are degenerate");
  double sum = 0.0;
  for (double x : xs) sum += x;
  double mean = sum / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  MeanStd out;
  out.mean = mean;
  out.std_dev = std::sqrt(var);
  out.n_used = xs.size();
  out.n_skipped = skipped;
  return out;
}

inline std::size_t intersection_size(const std::vector<std::size_t>& a,
                                     const std::vector<std::size_t>& b) {
  std::size_t n = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j])
      ++i;
    else if (b[j] < a[i])
      ++j;
    else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

}  // namespace detail

// Per-sample set precision/recall/F1 against aligned ground-truth sets.
// Samples with an empty prediction are skipped for precision, samples with
// empty ground truth are skipped for recall, and either condition skips F1.
inline ClassificationScores prf1(
    const std::vector<std::vector<std::size_t>>& pred_sets,
    const std::vector<std::vector<std::size_t>>& gt_sets, double tau = 0.0) {
  if (pred_sets.size() != gt_sets.size())
    throw ValidationError("prf1: " + std::to_string(pred_sets.size()) +
                          " prediction sets vs " +
                          std::to_string(gt_sets.size()) + " ground-truth sets");
  std::vector<double> ps, rs, f1s;
  std::size_t p_skip = 0, r_skip = 0, f_skip = 0;
  for (std::size_t i = 0; i < pred_sets.size(); ++i) {
    const auto& pred = pred_sets[i];
    const auto& gt = gt_sets[i];
    const auto hit = static_cast<double>(detail::intersection_size(pred, gt));
    const bool p_ok = !pred.empty(), r_ok = !gt.empty();
    double p = 0.0, r = 0.0;
    if (p_ok) {
      p = hit / static_cast<double>(pred.size());
      ps.push_back(p);
    } else {
      ++p_skip;
    }
    if (r_ok) {
      r = hit / static_cast<double>(gt.size());
      rs.push_back(r);
    } else {
      ++r_skip;
    }
    if (p_ok && r_ok)
      f1s.push_back(p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0);
    else
      ++f_skip;
  }
  ClassificationScores out;
  out.tau = tau;
  out.precision = detail::mean_std(ps, p_skip, "precision");
  out.recall = detail::mean_std(rs, r_skip, "recall");
  out.f1 = detail::mean_std(f1s, f_skip, "F1");
  return out;
}

// Cosine similarity; rejects zero vectors.
template <typename SeqA, typename SeqB>
double cosine(const SeqA& a, const SeqB& b) {
  if (a.size() != b.size())
    throw ValidationError("cosine: dimension mismatch " +
                          std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = static_cast<double>(a[i]);
    const double y = static_cast<double>(b[i]);
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0)
    throw ValidationError("cosine: zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace detail {

struct SpeakerGroup {
  std::string speaker_id;
  std::vector<const JoinedRecord*> utterances;  // store order
};

// Speakers in lexicographic order; utterances keep store order inside each.
// The groups borrow from `joined`, which must outlive them.
inline std::vector<SpeakerGroup> group_by_speaker(
    const std::vector<JoinedRecord>& joined) {
  std::map<std::string, std::vector<const JoinedRecord*>> by_speaker;
  for (const auto& j : joined) by_speaker[j.meta->speaker_id].push_back(&j);
  std::vector<SpeakerGroup> out;
  out.reserve(by_speaker.size());
  for (auto& [id, utts] : by_speaker)
    out.push_back(SpeakerGroup{id, std::move(utts)});
  return out;
}

// Stream-id bases keeping the three sampling protocols decorrelated while
// everything derives from one config seed.
inline constexpr std::uint64_t kHomogeneityStream = 1ULL << 32;
inline constexpr std::uint64_t kDiversityStream = 2ULL << 32;
inline constexpr std::uint64_t kTopKStream = 3ULL << 32;

}  // namespace detail

// Mean within-speaker cosine similarity. Per speaker: sample
// min(n_per_speaker, available) utterances without replacement, average over
// all unordered pairs excluding self-pairs, then average the per-speaker
// means. Speakers with fewer than two utterances are excluded with a warning.
inline double homogeneity(const EmbeddingStore& store, const Manifest& manifest,
                          int n_per_speaker, std::uint64_t seed,
                          std::vector<std::string>* warnings = nullptr) {
  if (n_per_speaker < 2)
    throw ValidationError("homogeneity: n_per_speaker must be >= 2");
  const auto joined = join_manifest(store, manifest);
  auto groups = detail::group_by_speaker(joined);
  double total = 0.0;
  std::size_t n_speakers = 0;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    if (g.utterances.size() < 2) {
      if (warnings)
        warnings->push_back("homogeneity: speaker '" + g.speaker_id +
                            "' excluded (fewer than 2 utterances)");
      continue;
    }
    Pcg32 rng(seed, detail::kHomogeneityStream + gi);
    const std::size_t k = std::min<std::size_t>(
        static_cast<std::size_t>(n_per_speaker), g.utterances.size());
    auto picked = rng.sample_indices(g.utterances.size(), k);
    double acc = 0.0;
    std::size_t n_pairs = 0;
    for (std::size_t i = 0; i < picked.size(); ++i)
      for (std::size_t j = i + 1; j < picked.size(); ++j) {
        acc += cosine(g.utterances[picked[i]]->embedding->vector,
                      g.utterances[picked[j]]->embedding->vector);
        ++n_pairs;
      }
    total += acc / static_cast<double>(n_pairs);
    ++n_speakers;
  }
  if (n_speakers == 0)
    throw ValidationError(
        "homogeneity: no speaker has at least 2 utterances");
  return total / static_cast<double>(n_speakers);
}

// Mean across-speaker cosine similarity: per repeat, one random utterance per
// speaker, averaged over all unordered cross pairs; mean over repeats.
inline double diversity(const EmbeddingStore& store, const Manifest& manifest,
                        int repeats, std::uint64_t seed) {
  if (repeats < 1) throw ValidationError("diversity: repeats must be >= 1");
  const auto joined = join_manifest(store, manifest);
  auto groups = detail::group_by_speaker(joined);
  if (groups.size() < 2)
    throw ValidationError("diversity: need at least 2 speakers, got " +
                          std::to_string(groups.size()));
  double total = 0.0;
  for (int r = 0; r < repeats; ++r) {
    Pcg32 rng(seed, detail::kDiversityStream + static_cast<std::uint64_t>(r));
    std::vector<const std::vector<float>*> picks;
    picks.reserve(groups.size());
    for (const auto& g : groups) {
      std::size_t idx =
          rng.below(static_cast<std::uint32_t>(g.utterances.size()));
      picks.push_back(&g.utterances[idx]->embedding->vector);
    }
    double acc = 0.0;
    std::size_t n_pairs = 0;
    for (std::size_t i = 0; i < picks.size(); ++i)
      for (std::size_t j = i + 1; j < picks.size(); ++j) {
        acc += cosine(*picks[i], *picks[j]);
        ++n_pairs;
      }
    total += acc / static_cast<double>(n_pairs);
  }
  return total / static_cast<double>(repeats);
}

// Top-k retrieval accuracy over a one-utterance-per-speaker gallery. Per
// repeat, each speaker contributes a gallery entry and a distinct query; a
// query scores a hit at k when its own speaker's gallery embedding ranks in
// the k most cosine-similar entries. Ties rank by ascending utterance_id.
// Returned accuracies are percentages averaged over repeats.
inline std::map<int, double> top_k_accuracy(
    const EmbeddingStore& store, const Manifest& manifest,
    const std::vector<int>& ks, int repeats, std::uint64_t seed,
    std::vector<std::string>* warnings = nullptr) {
  if (repeats < 1)
    throw ValidationError("top_k_accuracy: repeats must be >= 1");
  if (ks.empty()) throw ValidationError("top_k_accuracy: no k values");
  for (int k : ks)
    if (k < 1) throw ValidationError("top_k_accuracy: k must be >= 1");
  const auto joined = join_manifest(store, manifest);
  auto groups = detail::group_by_speaker(joined);
  std::vector<detail::SpeakerGroup> usable;
  for (const auto& g : groups) {
    if (g.utterances.size() < 2) {
      if (warnings)
        warnings->push_back("top_k: speaker '" + g.speaker_id +
                            "' excluded (fewer than 2 utterances)");
      continue;
    }
    usable.push_back(g);
  }
  const int max_k = *std::max_element(ks.begin(), ks.end());
  if (static_cast<int>(usable.size()) < std::max(max_k, 2))
    throw ValidationError("top_k_accuracy: need at least max(k)=" +
                          std::to_string(max_k) + " usable speakers, got " +
                          std::to_string(usable.size()));

  std::map<int, double> hit_sums;
  for (int k : ks) hit_sums[k] = 0.0;
  const std::size_t n_spk = usable.size();

  for (int r = 0; r < repeats; ++r) {
    Pcg32 rng(seed, detail::kTopKStream + static_cast<std::uint64_t>(r));
    struct Entry {
      const std::string* utt_id;
      const std::vector<float>* vec;
    };
    std::vector<Entry> gallery(n_spk);
    std::vector<const std::vector<float>*> queries(n_spk);
    for (std::size_t s = 0; s < n_spk; ++s) {
      const auto& utts = usable[s].utterances;
      std::size_t gal = rng.below(static_cast<std::uint32_t>(utts.size()));
      std::size_t q = rng.below(static_cast<std::uint32_t>(utts.size() - 1));
      if (q >= gal) ++q;  // query distinct from the gallery entry
      gallery[s] = {&utts[gal]->embedding->utterance_id,
                    &utts[gal]->embedding->vector};
      queries[s] = &utts[q]->embedding->vector;
    }
    for (std::size_t s = 0; s < n_spk; ++s) {
      struct Scored {
        double sim;
        const std::string* utt_id;
        std::size_t speaker;
      };
      std::vector<Scored> scored(n_spk);
      for (std::size_t t = 0; t < n_spk; ++t)
        scored[t] = {cosine(*queries[s], *gallery[t].vec), gallery[t].utt_id,
                     t};
      std::sort(scored.begin(), scored.end(),
                [](const Scored& a, const Scored& b) {
                  if (a.sim != b.sim) return a.sim > b.sim;
                  return *a.utt_id < *b.utt_id;
                });
      std::size_t rank = 0;
      for (; rank < n_spk; ++rank)
        if (scored[rank].speaker == s) break;
      for (int k : ks)
        if (rank < static_cast<std::size_t>(k)) hit_sums[k] += 1.0;
    }
  }

  std::map<int, double> out;
  for (int k : ks)
    out[k] = 100.0 * hit_sums[k] /
             (static_cast<double>(n_spk) * static_cast<double>(repeats));
  return out;
}

// Everything behind one similarity-summary row.
struct SimilarityReport {
  double homogeneity = 0.0;
  double diversity = 0.0;
  std::map<int, double> topk;  // k -> accuracy percent
  std::uint64_t seed = 0;
  int n_per_speaker = 0;
  int repeats = 0;
  std::vector<std::string> warnings;
};

inline SimilarityReport similarity_report(const EmbeddingStore& store,
                                          const Manifest& manifest,
                                          const std::vector<int>& ks,
                                          int n_per_speaker, int repeats,
                                          std::uint64_t seed) {
  SimilarityReport rep;
  rep.seed = seed;
  rep.n_per_speaker = n_per_speaker;
  rep.repeats = repeats;
  rep.homogeneity =
      homogeneity(store, manifest, n_per_speaker, seed, &rep.warnings);
  rep.diversity = diversity(store, manifest, repeats, seed);
  rep.topk = top_k_accuracy(store, manifest, ks, repeats, seed, &rep.warnings);
  return rep;
}

// Classification P/R/F1 between two aligned stores at each threshold.
// Prediction records drive the pairing; every prediction utterance must
// exist in the ground-truth store. Both stores must share one dimension.
inline std::vector<ClassificationScores> classify_stores(
    const EmbeddingStore& pred, const EmbeddingStore& gt,
    const std::vector<double>& taus) {
  if (pred.header.dim != gt.header.dim)
    throw ValidationError("classify_stores: dimension mismatch (" +
                          std::to_string(pred.header.dim) + " vs " +
                          std::to_string(gt.header.dim) + ")");
  std::vector<ClassificationScores> out;
  out.reserve(taus.size());
  for (double tau : taus) {
    std::vector<std::vector<std::size_t>> ps, gs;
    ps.reserve(pred.records.size());
    gs.reserve(pred.records.size());
    for (const auto& r : pred.records) {
      const EmbeddingRecord* g = gt.find(r.utterance_id);
      if (g == nullptr)
        throw ValidationError("classify_stores: utterance '" +
                              r.utterance_id +
                              "' missing from the ground-truth store");
      ps.push_back(binarize(r.vector, tau));
      gs.push_back(binarize(g->vector, tau));
    }
    out.push_back(prf1(ps, gs, tau));
  }
  return out;
}

inline std::string render_classification_report(
    const std::vector<ClassificationScores>& rows) {
  char buf[96];
  std::string out;
  auto line = [&](const char* name, const MeanStd& m) {
    std::snprintf(buf, sizeof(buf), "%s=%.6f std=%.6f used=%zu skipped=%zu\n",
                  name, m.mean, m.std_dev, m.n_used, m.n_skipped);
    out += buf;
  };
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "tau=%.6f\n", row.tau);
    out += buf;
    line("precision", row.precision);
    line("recall", row.recall);
    line("f1", row.f1);
  }
  return out;
}

// Line-delimited key=value rendering; byte-stable for fixed inputs and seed.
inline std::string render_similarity_report(const SimilarityReport& rep) {
  char buf[64];
  std::string out;
  std::snprintf(buf, sizeof(buf), "homogeneity=%.6f\n", rep.homogeneity);
  out += buf;
  std::snprintf(buf, sizeof(buf), "diversity=%.6f\n", rep.diversity);
  out += buf;
  for (const auto& [k, acc] : rep.topk) {
    std::snprintf(buf, sizeof(buf), "topk_%d=%.2f\n", k, acc);
    out += buf;
  }
  out += "seed=" + std::to_string(rep.seed) + "\n";
  out += "n_per_speaker=" + std::to_string(rep.n_per_speaker) + "\n";
  out += "repeats=" + std::to_string(rep.repeats) + "\n";
  for (const auto& w : rep.warnings) out += "warning=" + w + "\n";
  return out;
}

}  // namespace vove
