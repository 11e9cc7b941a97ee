// Copyright 2026 The Vo-Ve Authors.
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end tour of the library on a synthetic corpus: raw annotator
// intensities -> soft labels -> training -> embedding extraction ->
// evaluation -> interpretable pair sets -> ABX scoring -> explanation.
// Everything is written under ./vove_demo_out; reruns overwrite it.

#include <vove/vove.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace vove;

namespace {

void banner(const char* title) {
  std::printf("\n== %s ==\n", title);
}

std::string speaker_id(std::size_t s) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "spk%03zu", s);
  return buf;
}

// Raw annotations: three annotators per attribute. Each speaker gets a
// distinct profile of strong attributes plus a couple of mid-strength ones,
// covering the saturating {normal, normal, slightly} combination.
void write_annotations(const fs::path& path, std::size_t n_speakers) {
  std::ofstream os(path);
  for (std::size_t s = 0; s < n_speakers; ++s) {
    std::array<std::array<IntensityLevel, 3>, kNumAttributes> rows;
    for (auto& row : rows)
      row = {IntensityLevel::None, IntensityLevel::None, IntensityLevel::None};
    for (int j = 0; j < 5; ++j) {
      auto& row = rows[(s + 8 * static_cast<std::size_t>(j)) % kNumAttributes];
      row = j == 1 ? std::array<IntensityLevel, 3>{IntensityLevel::Normal,
                                                   IntensityLevel::Normal,
                                                   IntensityLevel::Slightly}
                   : std::array<IntensityLevel, 3>{IntensityLevel::Very,
                                                   IntensityLevel::Very,
                                                   IntensityLevel::Normal};
    }
    rows[(s + 4) % kNumAttributes] = {IntensityLevel::Normal,
                                      IntensityLevel::Slightly,
                                      IntensityLevel::None};
    rows[(s + 12) % kNumAttributes] = {IntensityLevel::Slightly,
                                       IntensityLevel::Slightly,
                                       IntensityLevel::None};
    os << speaker_id(s);
    for (const auto& row : rows) {
      os << '\t' << intensity_token(row[0]) << ',' << intensity_token(row[1])
         << ',' << intensity_token(row[2]);
    }
    os << '\n';
  }
}

// Synthetic audio: one sine per speaker (half-octave spacing), detuned per
// utterance, saved as 16-bit WAV files.
Manifest make_tone_corpus(const fs::path& dir, std::size_t n_speakers,
                          std::size_t utts_per_speaker, double seconds,
                          int sample_rate) {
  Manifest manifest;
  for (std::size_t s = 0; s < n_speakers; ++s) {
    const std::string spk = speaker_id(s);
    const double base_freq =
        160.0 * std::pow(2.0, 0.5 * static_cast<double>(s));
    for (std::size_t u = 0; u < utts_per_speaker; ++u) {
      char utt[32];
      std::snprintf(utt, sizeof(utt), "%s_u%02zu", spk.c_str(), u);
      const double freq = base_freq + 2.0 * static_cast<double>(u);
      const std::size_t n = static_cast<std::size_t>(seconds * sample_rate);
      std::vector<double> samples(n);
      constexpr double kTau = 6.283185307179586476925286766559;
      for (std::size_t i = 0; i < n; ++i)
        samples[i] = 0.5 * std::sin(kTau * freq * static_cast<double>(i) /
                                    sample_rate);
      const fs::path wav = dir / (std::string(utt) + ".wav");
      write_wav_pcm16(wav.string(), samples, sample_rate);
      manifest.records.push_back(UtteranceRecord{
          utt, spk, "t" + std::to_string(u), Gender::Unknown, wav.string()});
    }
  }
  manifest.validate();
  return manifest;
}

}  // namespace

int main() {
  try {
    const fs::path out = "vove_demo_out";
    fs::remove_all(out);
    fs::create_directories(out / "audio");
    const std::size_t n_speakers = 4;

    banner("soft labels from annotator intensities");
    const fs::path ann_path = out / "annotations.tsv";
    write_annotations(ann_path, n_speakers);
    auto annotations = read_annotations_file(ann_path.string());
    std::map<std::string, AttributeVector> labels;
    {
      std::ofstream os(out / "labels.tsv");
      for (const auto& ann : annotations) {
        AttributeVector y = annotation_to_soft_label(ann);
        write_soft_label(os, ann.speaker_id, y);
        labels[ann.speaker_id] = y;
      }
    }
    const AttributeVector& y0 = labels.at(speaker_id(0));
    std::printf("%zu speakers annotated; %s profile:\n", labels.size(),
                speaker_id(0).c_str());
    std::fputs(render_profile(profile(y0.values, 0.3)).c_str(), stdout);

    banner("synthetic corpus");
    Manifest manifest =
        make_tone_corpus(out / "audio", n_speakers, 4, 0.6, 16000);
    write_manifest_file((out / "manifest.tsv").string(), manifest);
    std::printf("%zu utterances across %zu speakers\n",
                manifest.records.size(), n_speakers);

    banner("training");
    FrontendConfig frontend;
    frontend.n_mels = 24;
    frontend.fft_size = 512;
    ModelConfig cfg;
    cfg.backbone_channels = 8;
    cfg.svhead_hidden = 16;
    cfg.batch = 4;
    cfg.epochs = 8;
    cfg.learning_rate = 3e-3;
    cfg.crop_seconds = 0.5;
    cfg.val_fraction = 0.25;
    cfg.seed = 7;
    TrainResult result = train(manifest, labels, cfg, frontend);
    for (const auto& row : result.log) {
      if (std::isnan(row.val_loss))
        std::printf("epoch %2d  train %.4f\n", row.epoch, row.train_loss);
      else
        std::printf("epoch %2d  train %.4f  val %.4f\n", row.epoch,
                    row.train_loss, row.val_loss);
    }
    write_train_log(result.log, (out / "train_log.tsv").string());

    banner("checkpoint round trip + extraction");
    const std::string ckpt = (out / "model.ckpt").string();
    save_checkpoint(result.state, ckpt);
    ModelState restored = load_checkpoint(ckpt);
    ExtractResult ex = extract(manifest, restored, frontend);
    write_store(ex.store, (out / "vove.store").string());
    std::printf("extracted %zu embeddings (%zu failures)\n",
                ex.store.records.size(), ex.failures.size());

    banner("classification against the soft labels");
    EmbeddingStore gt;
    gt.header.model_id = "labels";
    gt.header.dim = static_cast<int>(kNumAttributes);
    for (const auto& r : manifest.records) {
      const AttributeVector& y = labels.at(r.speaker_id);
      std::vector<float> vec(kNumAttributes);
      for (std::size_t i = 0; i < kNumAttributes; ++i)
        vec[i] = static_cast<float>(y.values[i]);
      gt.records.push_back(EmbeddingRecord{r.utterance_id, std::move(vec)});
    }
    gt.rebuild_index();
    std::fputs(render_classification_report(
                   classify_stores(ex.store, gt, {0.3, 0.5}))
                   .c_str(),
               stdout);

    banner("speaker-similarity metrics");
    SimilarityReport sim =
        similarity_report(ex.store, manifest, {1, 2}, 10, 3, cfg.seed);
    std::fputs(render_similarity_report(sim).c_str(), stdout);

    banner("interpretable pair sets (from the label store)");
    std::vector<std::string> warnings;
    auto dissimilar = build_inter_pairs(gt, manifest, SetKind::Dissimilar, 6,
                                        3, true, false, {}, &warnings);
    auto similar = build_inter_pairs(gt, manifest, SetKind::Similar, 6, 3,
                                     true, false, {}, &warnings);
    for (const auto& w : warnings) std::printf("note: %s\n", w.c_str());
    write_pairs_file(dissimilar, (out / "pairs_dissimilar.tsv").string());
    write_pairs_file(similar, (out / "pairs_similar.tsv").string());
    std::printf("%zu dissimilar, %zu similar pairs\n", dissimilar.size(),
                similar.size());
    if (!dissimilar.empty()) {
      const PairItem& p = dissimilar.front();
      std::printf("example: %s vs %s differs on '%s' by %+.3f\n",
                  p.utterance_a.c_str(), p.utterance_b.c_str(),
                  std::string(attribute_name(p.attribute_index)).c_str(),
                  p.delta);
    }

    banner("ABX export and scoring");
    FakePair fake;
    fake.audio_a = manifest.records[0].utterance_id + ".wav";
    fake.audio_b = manifest.records[4].utterance_id + ".wav";
    AbxPackage pkg = export_abx(dissimilar, (out / "audio").string(), fake,
                                (out / "abx").string(), 4);
    std::vector<AbxResponse> responses;
    int i = 0;
    for (const auto& e : pkg.key) {
      // One careful listener, one who fumbles every third real trial, and
      // one who misses the attention check and is dropped entirely.
      responses.push_back({"careful", e.trial_id, e.answer});
      char hasty = e.answer;
      if (!e.fake && ++i % 3 == 0) hasty = hasty == 'A' ? 'B' : 'A';
      responses.push_back({"hasty", e.trial_id, hasty});
      responses.push_back(
          {"skipper", e.trial_id, e.fake ? (e.answer == 'A' ? 'B' : 'A')
                                         : e.answer});
    }
    write_abx_responses(responses, (out / "abx" / "responses.tsv").string());
    std::fputs(render_abx_score(score_abx(responses, pkg.key)).c_str(),
               stdout);

    banner("explaining a voice difference");
    const EmbeddingRecord* a = ex.store.find(manifest.records[0].utterance_id);
    const EmbeddingRecord* b = ex.store.find(manifest.records[8].utterance_id);
    std::printf("%s vs %s, five most separating attributes:\n",
                a->utterance_id.c_str(), b->utterance_id.c_str());
    std::fputs(render_diff(diff_report(a->vector, b->vector), 5).c_str(),
               stdout);

    std::printf("\nartifacts under %s/\n", out.string().c_str());
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
