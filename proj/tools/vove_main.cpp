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

// `vove` command-line front end: every toolkit operation behind one binary
// with a declarative JSON run configuration. All randomness flows from the
// config seed (or --seed); outputs carry no timestamps, so a rerun with the
// same inputs is byte-identical.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vove/vove.hpp"

namespace {

using namespace vove;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
};

void add_common(CLI::App* sub, CommonOpts& common) {
  sub->add_option("--config", common.config_path,
                  "JSON run configuration file");
  sub->add_option("--seed", common.seed_override,
                  "Seed override (wins over the config seed)");
}

RunConfig load_common(const CommonOpts& common) {
  RunConfig rc;
  if (!common.config_path.empty()) rc = load_run_config(common.config_path);
  if (common.seed_override) rc.seed = *common.seed_override;
  return rc;
}

// Flag value if given, else the config "paths" entry, else an error naming
// both spellings.
std::string need_path(const RunConfig& rc, const std::string& flag_value,
                      const char* key, const char* flag) {
  if (!flag_value.empty()) return flag_value;
  auto it = rc.paths.find(key);
  if (it != rc.paths.end() && !it->second.empty()) return it->second;
  throw ValidationError(std::string("missing path: give --") + flag +
                        " or config paths." + key);
}

std::string opt_path(const RunConfig& rc, const std::string& flag_value,
                     const char* key) {
  if (!flag_value.empty()) return flag_value;
  auto it = rc.paths.find(key);
  return it == rc.paths.end() ? std::string() : it->second;
}

std::string need_input(const RunConfig& rc, const std::string& flag_value,
                       const char* key, const char* flag) {
  std::string p = need_path(rc, flag_value, key, flag);
  if (!std::filesystem::exists(p))
    throw IoError(std::string(flag) + ": '" + p + "' does not exist");
  return p;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << text;
  if (!os.flush()) throw IoError("failed writing '" + path + "'");
}

void emit_report(const std::string& text, const std::string& out_path) {
  std::fputs(text.c_str(), stdout);
  if (!out_path.empty()) write_text(out_path, text);
}

void warn_all(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings)
    std::fprintf(stderr, "warning: %s\n", w.c_str());
}

// ---------------------------------------------------------------------------

struct BuildLabelsOpts {
  CommonOpts common;
  std::string annotations, out;
};

void run_build_labels(const BuildLabelsOpts& o) {
  RunConfig rc = load_common(o.common);
  const std::string in =
      need_input(rc, o.annotations, "annotations", "annotations");
  const std::string out = need_path(rc, o.out, "out", "out");
  auto annotations = read_annotations_file(in);
  std::ostringstream os;
  for (const auto& ann : annotations)
    write_soft_label(os, ann.speaker_id, annotation_to_soft_label(ann));
  write_text(out, os.str());
  std::fprintf(stdout, "labels=%zu\n", annotations.size());
}

struct TrainOpts {
  CommonOpts common;
  std::string manifest, labels, audio_root, checkpoint, log;
};

void run_train(const TrainOpts& o) {
  RunConfig rc = load_common(o.common);
  const std::string manifest_path =
      need_input(rc, o.manifest, "manifest", "manifest");
  const std::string labels_path = need_input(rc, o.labels, "labels", "labels");
  const std::string ckpt = need_path(rc, o.checkpoint, "checkpoint",
                                     "out-checkpoint");
  const std::string log_path = opt_path(rc, o.log, "log");
  const std::string audio_root = opt_path(rc, o.audio_root, "audio_root");

  Manifest manifest = read_manifest_file(manifest_path);
  auto labels = read_soft_labels_file(labels_path);
  ModelConfig mc = rc.model;
  mc.seed = rc.seed;
  TrainResult result = train(manifest, labels, mc, rc.frontend, audio_root);
  save_checkpoint(result.state, ckpt);
  if (!log_path.empty()) write_train_log(result.log, log_path);
  for (const auto& row : result.log) {
    if (std::isnan(row.val_loss))
      std::fprintf(stdout, "epoch=%d train_loss=%.6f\n", row.epoch,
                   row.train_loss);
    else
      std::fprintf(stdout, "epoch=%d train_loss=%.6f val_loss=%.6f\n",
                   row.epoch, row.train_loss, row.val_loss);
  }
  std::fprintf(stdout, "best_epoch=%d\n", result.state.epoch);
}

struct ExtractOpts {
  CommonOpts common;
  std::string manifest, checkpoint, audio_root, out, errors;
};

void run_extract(const ExtractOpts& o) {
  RunConfig rc = load_common(o.common);
  const std::string manifest_path =
      need_input(rc, o.manifest, "manifest", "manifest");
  const std::string ckpt =
      need_input(rc, o.checkpoint, "checkpoint", "checkpoint");
  const std::string out = need_path(rc, o.out, "out", "out");
  const std::string errors_path = opt_path(rc, o.errors, "errors");
  const std::string audio_root = opt_path(rc, o.audio_root, "audio_root");

  Manifest manifest = read_manifest_file(manifest_path);
  ModelState state = load_checkpoint(ckpt);
  ExtractResult result = extract(manifest, state, rc.frontend, audio_root);

  if (!result.failures.empty()) {
    std::ostringstream os;
    for (const auto& f : result.failures)
      os << f.utterance_id << '\t' << f.message << '\n';
    if (!errors_path.empty()) write_text(errors_path, os.str());
    std::fprintf(stderr, "warning: %zu of %zu utterances failed\n",
                 result.failures.size(), manifest.records.size());
    for (const auto& f : result.failures)
      std::fprintf(stderr, "warning: %s: %s\n", f.utterance_id.c_str(),
                   f.message.c_str());
  }
  if (result.store.records.empty() && !manifest.records.empty())
    throw IoError("extract: every utterance failed");
  write_store(result.store, out);
  std::fprintf(stdout, "embeddings=%zu failures=%zu\n",
               result.store.records.size(), result.failures.size());
}

struct EvalClassOpts {
  CommonOpts common;
  std::string pred, gt, out;
};

void run_eval_class(const EvalClassOpts& o) {
  RunConfig rc = load_common(o.common);
  const std::string pred_path = need_input(rc, o.pred, "pred_store", "pred");
  const std::string gt_path = need_input(rc, o.gt, "gt_store", "gt");
  const std::string out = opt_path(rc, o.out, "out");
  EmbeddingStore pred = read_store(pred_path);
  EmbeddingStore gt = read_store(gt_path);
  auto rows = classify_stores(pred, gt, rc.metrics.taus);
  emit_report(render_classification_report(rows), out);
}

struct EvalSimOpts {
  CommonOpts common;
  std::string store, manifest, out;
};

void run_eval_sim(const EvalSimOpts& o) {
  RunConfig rc = load_common(o.common);
  const std::string store_path = need_input(rc, o.store, "store", "store");
  const std::string manifest_path =
      need_input(rc, o.manifest, "manifest", "manifest");
  const std::string out = opt_path(rc, o.out, "out");
  EmbeddingStore store = read_store(store_path);
  Manifest manifest = read_manifest_file(manifest_path);
  SimilarityReport rep =
      similarity_report(store, manifest, rc.metrics.ks,
                        rc.metrics.n_per_speaker, rc.metrics.repeats, rc.seed);
  emit_report(render_similarity_report(rep), out);
}

struct BuildPairsOpts {
  CommonOpts common;
  std::string kind, set, store, gt_store, synth_store, manifest, wer, out;
};

void run_build_pairs(const BuildPairsOpts& o) {
  RunConfig rc = load_common(o.common);
  const PairKind kind = parse_pair_kind(o.kind);
  const SetKind set_kind = parse_set_kind(o.set);
  const std::string manifest_path =
      need_input(rc, o.manifest, "manifest", "manifest");
  const std::string out = need_path(rc, o.out, "out", "out");
  Manifest manifest = read_manifest_file(manifest_path);

  std::vector<std::string> warnings;
  std::vector<PairItem> pairs;
  if (kind == PairKind::Inter) {
    const std::string store_path = need_input(rc, o.store, "store", "store");
    EmbeddingStore store = read_store(store_path);
    pairs = build_inter_pairs(store, manifest, set_kind, rc.pairs.n_pairs,
                              rc.seed, rc.pairs.gender_control,
                              rc.pairs.exclude_gender_attributes,
                              rc.pairs.thresholds, &warnings);
  } else {
    const std::string gt_path =
        need_input(rc, o.gt_store, "gt_store", "gt-store");
    const std::string synth_path =
        need_input(rc, o.synth_store, "synth_store", "synth-store");
    EmbeddingStore gt = read_store(gt_path);
    EmbeddingStore synth = read_store(synth_path);
    std::optional<std::map<std::string, double>> wer;
    const std::string wer_path = opt_path(rc, o.wer, "wer");
    if (!wer_path.empty()) wer = read_wer_file(wer_path);
    pairs = build_intra_pairs(gt, synth, manifest, set_kind, rc.pairs.n_pairs,
                              rc.seed, wer, rc.pairs.thresholds, &warnings);
  }
  warn_all(warnings);
  write_pairs_file(pairs, out);
  std::fprintf(stdout, "pairs=%zu kind=%s set=%s\n", pairs.size(),
               pair_kind_token(kind), set_kind_token(set_kind));
}

struct ExportAbxOpts {
  CommonOpts common;
  std::string pairs, audio_root, out_dir, fake_a, fake_b;
  std::string fake_label = "clear";
  std::string fake_expected = "A";
};

void run_export_abx(const ExportAbxOpts& o) {
  RunConfig rc = load_common(o.common);
  const std::string pairs_path = need_input(rc, o.pairs, "pairs", "pairs");
  const std::string audio_root =
      need_input(rc, o.audio_root, "audio_root", "audio-root");
  const std::string out_dir = need_path(rc, o.out_dir, "out_dir", "out-dir");
  const std::string fake_a = need_path(rc, o.fake_a, "fake_a", "fake-a");
  const std::string fake_b = need_path(rc, o.fake_b, "fake_b", "fake-b");
  if (o.fake_expected != "A" && o.fake_expected != "B")
    throw ValidationError("--fake-expected must be A or B");

  auto pairs = read_pairs_file(pairs_path);
  FakePair fake;
  fake.audio_a = fake_a;
  fake.audio_b = fake_b;
  fake.label = o.fake_label;
  fake.expected = o.fake_expected[0];
  AbxPackage pkg = export_abx(pairs, audio_root, fake, out_dir, rc.seed);
  std::fprintf(stdout, "trials=%zu out_dir=%s\n", pkg.trials.size(),
               out_dir.c_str());
}

struct ScoreAbxOpts {
  CommonOpts common;
  std::string responses, key, out;
};

void run_score_abx(const ScoreAbxOpts& o) {
  RunConfig rc = load_common(o.common);
  const std::string responses_path =
      need_input(rc, o.responses, "responses", "responses");
  const std::string key_path = need_input(rc, o.key, "key", "key");
  const std::string out = opt_path(rc, o.out, "out");
  auto key = read_abx_key(key_path);
  auto responses = read_abx_responses(responses_path);
  AbxScore score = score_abx(responses, key);
  emit_report(render_abx_score(score), out);
}

struct ExplainOpts {
  CommonOpts common;
  std::string store, utt_a, utt_b, out;
  double floor = 0.5;
  std::size_t top = 0;
};

void run_explain(const ExplainOpts& o) {
  RunConfig rc = load_common(o.common);
  const std::string store_path = need_input(rc, o.store, "store", "store");
  const std::string out = opt_path(rc, o.out, "out");
  EmbeddingStore store = read_store(store_path);
  auto lookup = [&store](const std::string& id) -> const EmbeddingRecord& {
    const EmbeddingRecord* r = store.find(id);
    if (r == nullptr)
      throw ValidationError("utterance '" + id + "' not in store");
    return *r;
  };
  const EmbeddingRecord& a = lookup(o.utt_a);
  if (o.utt_b.empty()) {
    emit_report(render_profile(profile(a.vector, o.floor, o.top)), out);
  } else {
    const EmbeddingRecord& b = lookup(o.utt_b);
    emit_report(render_diff(diff_report(a.vector, b.vector), o.top), out);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vo-Ve explainable voice-attribute embeddings"};
  app.require_subcommand(1);

  BuildLabelsOpts bl;
  auto* c_bl = app.add_subcommand(
      "build-labels", "Soft ground-truth labels from annotator intensities");
  add_common(c_bl, bl.common);
  c_bl->add_option("--annotations", bl.annotations, "Annotation TSV file");
  c_bl->add_option("--out", bl.out, "Output label file");

  TrainOpts tr;
  auto* c_tr = app.add_subcommand("train", "Train the attribute classifier");
  add_common(c_tr, tr.common);
  c_tr->add_option("--manifest", tr.manifest, "Utterance manifest");
  c_tr->add_option("--labels", tr.labels, "Per-speaker soft label file");
  c_tr->add_option("--audio-root", tr.audio_root,
                   "Base directory for relative audio paths");
  c_tr->add_option("--out-checkpoint", tr.checkpoint, "Checkpoint to write");
  c_tr->add_option("--log-out", tr.log, "Training log to write");

  ExtractOpts ex;
  auto* c_ex = app.add_subcommand("extract", "Extract Vo-Ve embeddings");
  add_common(c_ex, ex.common);
  c_ex->add_option("--manifest", ex.manifest, "Utterance manifest");
  c_ex->add_option("--checkpoint", ex.checkpoint, "Model checkpoint");
  c_ex->add_option("--audio-root", ex.audio_root,
                   "Base directory for relative audio paths");
  c_ex->add_option("--out", ex.out, "Embedding store to write");
  c_ex->add_option("--errors-out", ex.errors,
                   "Failure manifest to write when some utterances fail");

  EvalClassOpts ec;
  auto* c_ec = app.add_subcommand("eval-class",
                                  "Multi-label P/R/F1 between two stores");
  add_common(c_ec, ec.common);
  c_ec->add_option("--pred", ec.pred, "Predicted embedding store");
  c_ec->add_option("--gt", ec.gt, "Ground-truth store");
  c_ec->add_option("--out", ec.out, "Report file (also printed)");

  EvalSimOpts es;
  auto* c_es = app.add_subcommand(
      "eval-sim", "Speaker homogeneity / diversity / top-k report");
  add_common(c_es, es.common);
  c_es->add_option("--store", es.store, "Embedding store");
  c_es->add_option("--manifest", es.manifest, "Utterance manifest");
  c_es->add_option("--out", es.out, "Report file (also printed)");

  BuildPairsOpts bp;
  auto* c_bp = app.add_subcommand("build-pairs",
                                  "Interpretable pair-set construction");
  add_common(c_bp, bp.common);
  c_bp->add_option("--kind", bp.kind, "inter | intra")->required();
  c_bp->add_option("--set", bp.set, "dissimilar | similar")->required();
  c_bp->add_option("--store", bp.store, "Embedding store (inter pairs)");
  c_bp->add_option("--gt-store", bp.gt_store,
                   "Ground-truth store (intra pairs)");
  c_bp->add_option("--synth-store", bp.synth_store,
                   "Synthesized store (intra pairs)");
  c_bp->add_option("--manifest", bp.manifest, "Utterance manifest");
  c_bp->add_option("--wer", bp.wer, "WER table for candidate selection");
  c_bp->add_option("--out", bp.out, "Pair list to write");

  ExportAbxOpts ea;
  auto* c_ea = app.add_subcommand("export-abx",
                                  "Package a pair list as ABX trials");
  add_common(c_ea, ea.common);
  c_ea->add_option("--pairs", ea.pairs, "Pair list file");
  c_ea->add_option("--audio-root", ea.audio_root,
                   "Directory holding <utterance_id>.wav files");
  c_ea->add_option("--out-dir", ea.out_dir, "Output directory");
  c_ea->add_option("--fake-a", ea.fake_a, "Attention-check audio A");
  c_ea->add_option("--fake-b", ea.fake_b, "Attention-check audio B");
  c_ea->add_option("--fake-label", ea.fake_label,
                   "Attention-check attribute word");
  c_ea->add_option("--fake-expected", ea.fake_expected,
                   "Expected attention-check choice (A or B)");

  ScoreAbxOpts sa;
  auto* c_sa = app.add_subcommand("score-abx", "Score ABX responses");
  add_common(c_sa, sa.common);
  c_sa->add_option("--responses", sa.responses, "Respondent choice file");
  c_sa->add_option("--key", sa.key, "Answer key from export-abx");
  c_sa->add_option("--out", sa.out, "Report file (also printed)");

  ExplainOpts xp;
  auto* c_xp = app.add_subcommand(
      "explain", "Attribute profile of one utterance or diff of two");
  add_common(c_xp, xp.common);
  c_xp->add_option("--store", xp.store, "Embedding store");
  c_xp->add_option("--utterance", xp.utt_a, "Utterance to profile")
      ->required();
  c_xp->add_option("--other", xp.utt_b,
                   "Second utterance: report the difference instead");
  c_xp->add_option("--floor", xp.floor, "Profile floor (default 0.5)");
  c_xp->add_option("--top", xp.top, "Keep only the strongest N rows");
  c_xp->add_option("--out", xp.out, "Report file (also printed)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_bl->parsed()) run_build_labels(bl);
    if (c_tr->parsed()) run_train(tr);
    if (c_ex->parsed()) run_extract(ex);
    if (c_ec->parsed()) run_eval_class(ec);
    if (c_es->parsed()) run_eval_sim(es);
    if (c_bp->parsed()) run_build_pairs(bp);
    if (c_ea->parsed()) run_export_abx(ea);
    if (c_sa->parsed()) run_score_abx(sa);
    if (c_xp->parsed()) run_explain(xp);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
