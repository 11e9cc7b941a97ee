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
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vove/attributes.hpp"
#include "vove/error.hpp"
#include "vove/rng.hpp"
#include "vove/store.hpp"

namespace vove {

enum class PairKind { Inter, Intra };
enum class SetKind { Dissimilar, Similar };

inline const char* pair_kind_token(PairKind k) {
  return k == PairKind::Inter ? "inter" : "intra";
}
inline const char* set_kind_token(SetKind k) {
  return k == SetKind::Dissimilar ? "dissimilar" : "similar";
}
inline PairKind parse_pair_kind(const std::string& s) {
  if (s == "inter") return PairKind::Inter;
  if (s == "intra") return PairKind::Intra;
  throw ValidationError("unknown pair kind '" + s + "'");
}
inline SetKind parse_set_kind(const std::string& s) {
  if (s == "dissimilar") return SetKind::Dissimilar;
  if (s == "similar") return SetKind::Similar;
  throw ValidationError("unknown set kind '" + s + "'");
}

// One labeled evaluation pair. For intra pairs, utterance_a is the
// ground-truth member and utterance_b the synthesized one.
struct PairItem {
  std::string utterance_a;
  std::string utterance_b;
  std::size_t attribute_index = 0;
  double delta = 0.0;  // v_a[attribute] - v_b[attribute]
  PairKind pair_kind = PairKind::Inter;
  SetKind set_kind = SetKind::Dissimilar;
};

// Qualification thresholds: a dimension qualifies a dissimilar pair when
// |delta| is strictly greater than `dissimilar`, a similar pair when |delta|
// is strictly less than `similar`.
struct PairThresholds {
  double dissimilar = 0.3;
  double similar = 0.1;

  void validate() const {
    if (!(dissimilar > 0.0) || !(similar > 0.0))
      throw ValidationError("pair thresholds must be positive");
  }
};

namespace detail {

inline constexpr std::uint64_t kInterPairStream = 10;
inline constexpr std::uint64_t kIntraPairStream = 11;
inline constexpr std::uint64_t kAbxShuffleStream = 12;

inline const std::array<std::size_t, 3>& gender_attribute_indices() {
  static const std::array<std::size_t, 3> idx = {
      attribute_index("feminine"), attribute_index("gender-neutral"),
      attribute_index("masculine")};
  return idx;
}

inline void require_attribute_store(const EmbeddingStore& store,
                                    const char* who) {
  if (store.header.dim != kNumAttributes)
    throw ValidationError(std::string(who) + ": store dimension " +
                          std::to_string(store.header.dim) +
                          " is not the 44-attribute layout");
}

// Dimensions qualifying (a, b) for `set_kind` under `thr`, ascending.
inline std::vector<std::size_t> qualifying_dims(const std::vector<float>& a,
                                                const std::vector<float>& b,
                                                SetKind set_kind,
                                                const PairThresholds& thr,
                                                bool exclude_gender_attrs) {
  std::vector<std::size_t> dims;
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    if (exclude_gender_attrs) {
      const auto& g = gender_attribute_indices();
      if (std::find(g.begin(), g.end(), i) != g.end()) continue;
    }
    const double d = std::fabs(static_cast<double>(a[i]) -
                               static_cast<double>(b[i]));
    const bool ok = set_kind == SetKind::Dissimilar ? d > thr.dissimilar
                                                    : d < thr.similar;
    if (ok) dims.push_back(i);
  }
  return dims;
}

}  // namespace detail

// Inter-speaker pairs: different speakers reading the same text (and of the
// same gender when gender_control is on). Candidates are enumerated in a
// canonical order, shuffled under the seed, and each kept pair is labeled with
// one attribute drawn uniformly from the dimensions that qualify it.
inline std::vector<PairItem> build_inter_pairs(
    const EmbeddingStore& store, const Manifest& manifest, SetKind set_kind,
    int n_pairs, std::uint64_t seed, bool gender_control = true,
    bool exclude_gender_attrs = false, const PairThresholds& thresholds = {},
    std::vector<std::string>* warnings = nullptr) {
  detail::require_attribute_store(store, "build_inter_pairs");
  thresholds.validate();
  if (n_pairs < 0) throw ValidationError("build_inter_pairs: n_pairs < 0");
  const auto joined = join_manifest(store, manifest);

  // Bucket by text (and gender under control), then list records per bucket
  // sorted by utterance id so the candidate order is canonical.
  std::map<std::string, std::vector<const JoinedRecord*>> buckets;
  for (const auto& j : joined) {
    std::string key = j.meta->text_id;
    if (gender_control) key += "\x1f" + std::string(gender_token(j.meta->gender));
    buckets[key].push_back(&j);
  }
  struct Candidate {
    const JoinedRecord* a;
    const JoinedRecord* b;
  };
  std::vector<Candidate> candidates;
  for (auto& [key, recs] : buckets) {
    std::sort(recs.begin(), recs.end(),
              [](const JoinedRecord* x, const JoinedRecord* y) {
                return x->embedding->utterance_id < y->embedding->utterance_id;
              });
    for (std::size_t i = 0; i < recs.size(); ++i)
      for (std::size_t j = i + 1; j < recs.size(); ++j)
        if (recs[i]->meta->speaker_id != recs[j]->meta->speaker_id)
          candidates.push_back({recs[i], recs[j]});
  }

  Pcg32 rng(seed, detail::kInterPairStream);
  rng.shuffle(candidates);

  std::vector<PairItem> out;
  for (const auto& c : candidates) {
    if (static_cast<int>(out.size()) >= n_pairs) break;
    auto dims = detail::qualifying_dims(c.a->embedding->vector,
                                        c.b->embedding->vector, set_kind,
                                        thresholds, exclude_gender_attrs);
    if (dims.empty()) continue;
    std::size_t attr = dims[rng.below(static_cast<std::uint32_t>(dims.size()))];
    PairItem item;
    item.utterance_a = c.a->embedding->utterance_id;
    item.utterance_b = c.b->embedding->utterance_id;
    item.attribute_index = attr;
    item.delta = static_cast<double>(c.a->embedding->vector[attr]) -
                 static_cast<double>(c.b->embedding->vector[attr]);
    item.pair_kind = PairKind::Inter;
    item.set_kind = set_kind;
    out.push_back(std::move(item));
  }
  if (static_cast<int>(out.size()) < n_pairs && warnings)
    warnings->push_back("build_inter_pairs: only " +
                        std::to_string(out.size()) + " of " +
                        std::to_string(n_pairs) + " requested pairs qualify");
  return out;
}

// Intra-speaker pairs: a ground-truth utterance against a synthesized
// rendition of it. Synth records link to their ground truth by id: either the
// same utterance id or "<gt_id>#<variant>". With several candidates per
// ground-truth utterance, a WER table decides (lowest wins, ties by id);
// without one, multiple candidates are an error rather than a silent pick.
inline std::vector<PairItem> build_intra_pairs(
    const EmbeddingStore& gt_store, const EmbeddingStore& synth_store,
    const Manifest& manifest, SetKind set_kind, int n_pairs,
    std::uint64_t seed,
    const std::optional<std::map<std::string, double>>& wer = std::nullopt,
    const PairThresholds& thresholds = {},
    std::vector<std::string>* warnings = nullptr) {
  detail::require_attribute_store(gt_store, "build_intra_pairs");
  detail::require_attribute_store(synth_store, "build_intra_pairs");
  thresholds.validate();
  if (n_pairs < 0) throw ValidationError("build_intra_pairs: n_pairs < 0");
  const auto joined = join_manifest(gt_store, manifest);  // validates coverage

  std::map<std::string, std::vector<const EmbeddingRecord*>> synth_by_base;
  for (const auto& r : synth_store.records) {
    std::string base = r.utterance_id.substr(0, r.utterance_id.find('#'));
    synth_by_base[base].push_back(&r);
  }
  for (auto& [base, cands] : synth_by_base)
    std::sort(cands.begin(), cands.end(),
              [](const EmbeddingRecord* x, const EmbeddingRecord* y) {
                return x->utterance_id < y->utterance_id;
              });

  struct Linked {
    const EmbeddingRecord* gt;
    const EmbeddingRecord* synth;
  };
  std::vector<Linked> linked;
  for (const auto& j : joined) {
    auto it = synth_by_base.find(j.embedding->utterance_id);
    if (it == synth_by_base.end()) continue;
    const auto& cands = it->second;
    const EmbeddingRecord* pick = nullptr;
    if (cands.size() == 1) {
      pick = cands.front();
    } else {
      if (!wer)
        throw ValidationError(
            "build_intra_pairs: " + std::to_string(cands.size()) +
            " synthesized candidates for '" + j.embedding->utterance_id +
            "' but no WER table; supply per-candidate WER scores to define "
            "the selection");
      double best = 0.0;
      for (const auto* c : cands) {
        auto w = wer->find(c->utterance_id);
        if (w == wer->end())
          throw ValidationError(
              "build_intra_pairs: WER table has no entry for candidate '" +
              c->utterance_id + "'");
        if (pick == nullptr || w->second < best) {
          pick = c;  // ties keep the earlier (lexicographically first) id
          best = w->second;
        }
      }
    }
    linked.push_back({j.embedding, pick});
  }

  Pcg32 rng(seed, detail::kIntraPairStream);
  rng.shuffle(linked);

  std::vector<PairItem> out;
  for (const auto& l : linked) {
    if (static_cast<int>(out.size()) >= n_pairs) break;
    auto dims = detail::qualifying_dims(l.gt->vector, l.synth->vector,
                                        set_kind, thresholds, false);
    if (dims.empty()) continue;
    std::size_t attr = dims[rng.below(static_cast<std::uint32_t>(dims.size()))];
    PairItem item;
    item.utterance_a = l.gt->utterance_id;
    item.utterance_b = l.synth->utterance_id;
    item.attribute_index = attr;
    item.delta = static_cast<double>(l.gt->vector[attr]) -
                 static_cast<double>(l.synth->vector[attr]);
    item.pair_kind = PairKind::Intra;
    item.set_kind = set_kind;
    out.push_back(std::move(item));
  }
  if (static_cast<int>(out.size()) < n_pairs && warnings)
    warnings->push_back("build_intra_pairs: only " +
                        std::to_string(out.size()) + " of " +
                        std::to_string(n_pairs) + " requested pairs qualify");
  return out;
}

// ---------------------------------------------------------------------------
// Pair list files: "VOVEPAIRS 1" then one tab-separated line per pair.

inline constexpr const char* kPairsMagic = "VOVEPAIRS 1";

inline void write_pairs(const std::vector<PairItem>& pairs,
                        std::ostream& os) {
  os << kPairsMagic << "\n";
  char buf[32];
  for (const auto& p : pairs) {
    std::snprintf(buf, sizeof(buf), "%.6f", p.delta);
    os << p.utterance_a << '\t' << p.utterance_b << '\t'
       << attribute_name(p.attribute_index) << '\t' << buf << '\t'
       << pair_kind_token(p.pair_kind) << '\t' << set_kind_token(p.set_kind)
       << '\n';
  }
}

inline void write_pairs_file(const std::vector<PairItem>& pairs,
                             const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_pairs(pairs, os);
  if (!os.flush()) throw IoError("failed writing '" + path + "'");
}

inline std::vector<PairItem> read_pairs(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kPairsMagic)
    throw FormatError("pair list: missing '" + std::string(kPairsMagic) +
                      "' header");
  std::vector<PairItem> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 6)
      throw ParseError("pair list: expected 6 fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    PairItem p;
    p.utterance_a = fields[0];
    p.utterance_b = fields[1];
    try {
      p.attribute_index = attribute_index(fields[2]);
      p.delta = std::stod(fields[3]);
      p.pair_kind = parse_pair_kind(fields[4]);
      p.set_kind = parse_set_kind(fields[5]);
    } catch (const std::exception& e) {
      throw ParseError(std::string("pair list: ") + e.what(), line_no);
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<PairItem> read_pairs_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open pair list '" + path + "'");
  return read_pairs(is);
}

// WER table for intra-pair candidate selection: `utterance_id<TAB>wer`
// per line, one entry per synthesized utterance.
inline std::map<std::string, double> read_wer_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open WER table '" + path + "'");
  std::map<std::string, double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 2)
      throw ParseError("WER table: expected utterance_id<TAB>wer", line_no);
    double wer = 0.0;
    try {
      std::size_t used = 0;
      wer = std::stod(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("trail");
    } catch (const std::exception&) {
      throw ParseError("WER table: bad value '" + fields[1] + "'", line_no);
    }
    if (!(wer >= 0.0))
      throw ParseError("WER table: negative value for '" + fields[0] + "'",
                       line_no);
    if (!out.emplace(fields[0], wer).second)
      throw ParseError("WER table: duplicate utterance '" + fields[0] + "'",
                       line_no);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ABX packages.

// The attention-check pair: audio paths (resolved against the audio root
// unless absolute), the attribute word to display, and the expected choice.
struct FakePair {
  std::string audio_a;
  std::string audio_b;
  std::string label = "clear";
  char expected = 'A';
};

struct AbxTrial {
  std::string trial_id;
  std::string audio_a;
  std::string audio_b;
  std::string label;
};

struct AbxKeyEntry {
  std::string trial_id;
  bool fake = false;
  char answer = 'A';  // member with the higher value on the labeled dimension
  std::string label;
  double delta = 0.0;  // 0 for the fake trial
};

struct AbxPackage {
  std::vector<AbxTrial> trials;   // presentation order
  std::vector<AbxKeyEntry> key;   // aligned with trials
};

inline constexpr const char* kAbxTrialsMagic = "VOVEABX 1";
inline constexpr const char* kAbxKeyMagic = "VOVEABXKEY 1";
inline constexpr const char* kAbxResponsesMagic = "VOVEABXRESP 1";

// Builds the ABX package for `pairs`: one trial per pair plus the fake trial,
// seeded-shuffled together, with sequential trial ids assigned after the
// shuffle so the id sequence gives nothing away. The answer for a real trial
// is the member with the higher value on the labeled dimension (A on an exact
// tie). Writes trials.tsv and answer_key.tsv under out_dir. Real audio
// resolves to <audio_root>/<utterance_id>.wav and must exist.
inline AbxPackage export_abx(const std::vector<PairItem>& pairs,
                             const std::string& audio_root,
                             const FakePair& fake, const std::string& out_dir,
                             std::uint64_t seed) {
  namespace fs = std::filesystem;
  if (fake.expected != 'A' && fake.expected != 'B')
    throw ValidationError("export_abx: fake pair expected choice must be A/B");

  auto resolve = [&](const std::string& p) {
    fs::path fp(p);
    return fp.is_absolute() ? fp : fs::path(audio_root) / fp;
  };
  std::vector<std::string> missing;
  auto check = [&](const fs::path& p) {
    if (!fs::exists(p)) missing.push_back(p.string());
  };
  for (const auto& p : pairs) {
    check(resolve(p.utterance_a + ".wav"));
    check(resolve(p.utterance_b + ".wav"));
  }
  check(resolve(fake.audio_a));
  check(resolve(fake.audio_b));
  if (!missing.empty()) {
    std::string msg = "export_abx: missing audio:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw IoError(msg);
  }

  struct Staged {
    AbxTrial trial;
    AbxKeyEntry key;
  };
  std::vector<Staged> staged;
  staged.reserve(pairs.size() + 1);
  for (const auto& p : pairs) {
    Staged s;
    s.trial.audio_a = p.utterance_a + ".wav";
    s.trial.audio_b = p.utterance_b + ".wav";
    s.trial.label = std::string(attribute_name(p.attribute_index));
    s.key.fake = false;
    s.key.answer = p.delta >= 0.0 ? 'A' : 'B';
    s.key.label = s.trial.label;
    s.key.delta = p.delta;
    staged.push_back(std::move(s));
  }
  {
    Staged s;
    s.trial.audio_a = fake.audio_a;
    s.trial.audio_b = fake.audio_b;
    s.trial.label = fake.label;
    s.key.fake = true;
    s.key.answer = fake.expected;
    s.key.label = fake.label;
    s.key.delta = 0.0;
    staged.push_back(std::move(s));
  }

  Pcg32 rng(seed, detail::kAbxShuffleStream);
  rng.shuffle(staged);
  for (std::size_t i = 0; i < staged.size(); ++i) {
    char id[24];
    std::snprintf(id, sizeof(id), "trial_%04zu", i + 1);
    staged[i].trial.trial_id = id;
    staged[i].key.trial_id = id;
  }

  fs::create_directories(out_dir);
  {
    std::ofstream os(fs::path(out_dir) / "trials.tsv");
    if (!os) throw IoError("export_abx: cannot write trials.tsv");
    os << kAbxTrialsMagic << "\n";
    for (const auto& s : staged)
      os << s.trial.trial_id << '\t' << s.trial.audio_a << '\t'
         << s.trial.audio_b << '\t' << s.trial.label << '\n';
    if (!os.flush()) throw IoError("export_abx: failed writing trials.tsv");
  }
  {
    std::ofstream os(fs::path(out_dir) / "answer_key.tsv");
    if (!os) throw IoError("export_abx: cannot write answer_key.tsv");
    os << kAbxKeyMagic << "\n";
    char buf[32];
    for (const auto& s : staged) {
      std::snprintf(buf, sizeof(buf), "%.6f", s.key.delta);
      os << s.key.trial_id << '\t' << (s.key.fake ? "fake" : "real") << '\t'
         << s.key.answer << '\t' << s.key.label << '\t' << buf << '\n';
    }
    if (!os.flush())
      throw IoError("export_abx: failed writing answer_key.tsv");
  }

  AbxPackage pkg;
  for (auto& s : staged) {
    pkg.trials.push_back(std::move(s.trial));
    pkg.key.push_back(std::move(s.key));
  }
  return pkg;
}

inline std::vector<AbxKeyEntry> read_abx_key(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open answer key '" + path + "'");
  std::string line;
  if (!std::getline(is, line) || line != kAbxKeyMagic)
    throw FormatError("answer key: missing '" + std::string(kAbxKeyMagic) +
                      "' header");
  std::vector<AbxKeyEntry> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = detail::split(line, '\t');
    if (f.size() != 5)
      throw ParseError("answer key: expected 5 fields, got " +
                           std::to_string(f.size()),
                       line_no);
    AbxKeyEntry e;
    e.trial_id = f[0];
    if (f[1] == "fake")
      e.fake = true;
    else if (f[1] == "real")
      e.fake = false;
    else
      throw ParseError("answer key: unknown trial kind '" + f[1] + "'",
                       line_no);
    if (f[2] != "A" && f[2] != "B")
      throw ParseError("answer key: answer must be A or B", line_no);
    e.answer = f[2][0];
    e.label = f[3];
    try {
      e.delta = std::stod(f[4]);
    } catch (const std::exception&) {
      throw ParseError("answer key: bad delta '" + f[4] + "'", line_no);
    }
    out.push_back(std::move(e));
  }
  return out;
}

struct AbxResponse {
  std::string respondent_id;
  std::string trial_id;
  char choice = 'A';
};

inline std::vector<AbxResponse> read_abx_responses(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open responses '" + path + "'");
  std::string line;
  if (!std::getline(is, line) || line != kAbxResponsesMagic)
    throw FormatError("responses: missing '" +
                      std::string(kAbxResponsesMagic) + "' header");
  std::vector<AbxResponse> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = detail::split(line, '\t');
    if (f.size() != 3)
      throw ParseError("responses: expected 3 fields, got " +
                           std::to_string(f.size()),
                       line_no);
    if (f[2] != "A" && f[2] != "B")
      throw ParseError("responses: choice must be A or B", line_no);
    out.push_back(AbxResponse{f[0], f[1], f[2][0]});
  }
  return out;
}

inline void write_abx_responses(const std::vector<AbxResponse>& responses,
                                const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << kAbxResponsesMagic << "\n";
  for (const auto& r : responses)
    os << r.respondent_id << '\t' << r.trial_id << '\t' << r.choice << '\n';
  if (!os.flush()) throw IoError("failed writing '" + path + "'");
}

struct AttributeScore {
  std::size_t matches = 0;
  std::size_t total = 0;
  double percent = 0.0;
};

struct AbxScore {
  double accuracy_percent = 0.0;
  std::size_t matches = 0;
  std::size_t total = 0;
  std::map<std::string, AttributeScore> per_attribute;
  std::size_t n_respondents = 0;
  std::size_t n_retained = 0;
};

// Scores responses against the answer key. A respondent is retained only if
// they answered the fake trial correctly; every response of a dropped
// respondent is excluded. Accuracy counts retained responses to real trials
// whose choice matches the keyed answer.
inline AbxScore score_abx(const std::vector<AbxResponse>& responses,
                          const std::vector<AbxKeyEntry>& key) {
  std::map<std::string, const AbxKeyEntry*> by_trial;
  const AbxKeyEntry* fake = nullptr;
  for (const auto& e : key) {
    if (!by_trial.emplace(e.trial_id, &e).second)
      throw ValidationError("score_abx: duplicate trial '" + e.trial_id +
                            "' in answer key");
    if (e.fake) {
      if (fake)
        throw ValidationError("score_abx: answer key has multiple fake trials");
      fake = &e;
    }
  }
  if (!fake)
    throw ValidationError("score_abx: answer key lacks a fake trial");

  std::map<std::string, std::vector<const AbxResponse*>> by_respondent;
  for (const auto& r : responses) {
    if (by_trial.find(r.trial_id) == by_trial.end())
      throw ValidationError("score_abx: response references unknown trial '" +
                            r.trial_id + "'");
    by_respondent[r.respondent_id].push_back(&r);
  }

  AbxScore score;
  score.n_respondents = by_respondent.size();
  for (const auto& [rid, rs] : by_respondent) {
    bool passed_fake = false;
    for (const auto* r : rs)
      if (r->trial_id == fake->trial_id && r->choice == fake->answer)
        passed_fake = true;
    if (!passed_fake) continue;  // failed or skipped the attention check
    ++score.n_retained;
    for (const auto* r : rs) {
      const AbxKeyEntry* e = by_trial.at(r->trial_id);
      if (e->fake) continue;
      auto& attr = score.per_attribute[e->label];
      ++attr.total;
      ++score.total;
      if (r->choice == e->answer) {
        ++attr.matches;
        ++score.matches;
      }
    }
  }
  if (score.total == 0)
    throw ValidationError(
        "score_abx: no scorable responses remain after dropping respondents "
        "who failed the attention check");
  score.accuracy_percent =
      100.0 * static_cast<double>(score.matches) /
      static_cast<double>(score.total);
  for (auto& [label, a] : score.per_attribute)
    a.percent = a.total == 0
                    ? 0.0
                    : 100.0 * static_cast<double>(a.matches) /
                          static_cast<double>(a.total);
  return score;
}

inline std::string render_abx_score(const AbxScore& s) {
  char buf[96];
  std::string out;
  std::snprintf(buf, sizeof(buf), "accuracy=%.2f\n", s.accuracy_percent);
  out += buf;
  std::snprintf(buf, sizeof(buf), "matches=%zu/%zu\n", s.matches, s.total);
  out += buf;
  std::snprintf(buf, sizeof(buf), "respondents_retained=%zu/%zu\n",
                s.n_retained, s.n_respondents);
  out += buf;
  for (const auto& [label, a] : s.per_attribute) {
    std::snprintf(buf, sizeof(buf), "attr_%s=%.2f (%zu/%zu)\n", label.c_str(),
                  a.percent, a.matches, a.total);
    out += buf;
  }
  return out;
}

}  // namespace vove
