// Copyright 2026 The Vo-Ve Authors.
// SPDX-License-Identifier: Apache-2.0

#include <vove/config.hpp>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "testutil.hpp"

namespace vove {
namespace {

RunConfig parse(const std::string& text) {
  return parse_run_config(nlohmann::json::parse(text));
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

TEST(RunConfig, EmptyObjectYieldsDefaults) {
  RunConfig cfg = parse("{}");
  EXPECT_EQ(cfg.seed, 0u);
  EXPECT_EQ(cfg.frontend.sample_rate, 16000);
  EXPECT_EQ(cfg.model.backbone_channels, 64);
  EXPECT_EQ(cfg.metrics.taus, (std::vector<double>{0.3, 0.5, 0.7}));
  EXPECT_EQ(cfg.metrics.n_per_speaker, 100);
  EXPECT_EQ(cfg.metrics.repeats, 10);
  EXPECT_EQ(cfg.metrics.ks, (std::vector<int>{1, 2, 3}));
  EXPECT_DOUBLE_EQ(cfg.pairs.thresholds.dissimilar, 0.3);
  EXPECT_DOUBLE_EQ(cfg.pairs.thresholds.similar, 0.1);
  EXPECT_EQ(cfg.pairs.n_pairs, 20);
  EXPECT_TRUE(cfg.pairs.gender_control);
  EXPECT_FALSE(cfg.pairs.exclude_gender_attributes);
  EXPECT_TRUE(cfg.paths.empty());
}

TEST(RunConfig, ParsesEveryScope) {
  RunConfig cfg = parse(R"({
    "seed": 1234567890123,
    "frontend": {"sample_rate": 8000, "window_ms": 20.0, "hop_ms": 5.0,
                 "n_mels": 24, "fft_size": 512, "log_floor": 1e-8,
                 "mean_normalize": false},
    "model": {"backbone_channels": 16, "svhead_hidden": 32,
              "learning_rate": 0.01, "weight_decay": 0.0, "epochs": 3,
              "batch": 2, "crop_seconds": 0.5, "val_fraction": 0.25},
    "metrics": {"taus": [0.4], "n_per_speaker": 5, "repeats": 2, "ks": [2]},
    "pairs": {"dissimilar_threshold": 0.5, "similar_threshold": 0.05,
              "n_pairs": 3, "gender_control": false,
              "exclude_gender_attributes": true},
    "paths": {"manifest": "m.tsv", "store": "v.store", "out": "report.txt"}
  })");
  EXPECT_EQ(cfg.seed, 1234567890123ull);
  EXPECT_EQ(cfg.frontend.sample_rate, 8000);
  EXPECT_DOUBLE_EQ(cfg.frontend.hop_ms, 5.0);
  EXPECT_FALSE(cfg.frontend.mean_normalize);
  EXPECT_EQ(cfg.model.backbone_channels, 16);
  EXPECT_DOUBLE_EQ(cfg.model.val_fraction, 0.25);
  EXPECT_EQ(cfg.metrics.taus, (std::vector<double>{0.4}));
  EXPECT_EQ(cfg.metrics.ks, (std::vector<int>{2}));
  EXPECT_DOUBLE_EQ(cfg.pairs.thresholds.dissimilar, 0.5);
  EXPECT_FALSE(cfg.pairs.gender_control);
  EXPECT_TRUE(cfg.pairs.exclude_gender_attributes);
  ASSERT_EQ(cfg.paths.size(), 3u);
  EXPECT_EQ(cfg.paths.at("manifest"), "m.tsv");
  EXPECT_EQ(cfg.paths.at("out"), "report.txt");
}

TEST(RunConfig, RejectsUnknownKeysWithScopedName) {
  EXPECT_NE(error_of(R"({"bogus": 1})").find("unknown key 'bogus'"),
            std::string::npos);
  EXPECT_NE(
      error_of(R"({"metrics": {"tau": [0.5]}})").find("'metrics.tau'"),
      std::string::npos);
  EXPECT_NE(error_of(R"({"paths": {"output": "x"}})").find("'paths.output'"),
            std::string::npos);
  EXPECT_NE(
      error_of(R"({"model": {"n_speakers": 4}})").find("'model.n_speakers'"),
      std::string::npos);
}

TEST(RunConfig, RejectsWrongTypes) {
  EXPECT_NE(error_of(R"({"seed": "7"})").find("seed"), std::string::npos);
  EXPECT_NE(error_of(R"({"seed": -1})").find("seed"), std::string::npos);
  EXPECT_NE(error_of(R"({"metrics": {"taus": 0.5}})").find("array"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"metrics": {"ks": [1.5]}})").find("metrics.ks[]"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"pairs": {"gender_control": 1}})")
                .find("pairs.gender_control"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"frontend": {"n_mels": "40"}})")
                .find("frontend.n_mels"),
            std::string::npos);
  EXPECT_NE(error_of(R"([1, 2])").find("object"), std::string::npos);
}

TEST(RunConfig, ValidatesRanges) {
  EXPECT_NE(error_of(R"({"metrics": {"taus": []}})").find("taus"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"metrics": {"taus": [1.5]}})").find("(0,1)"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"metrics": {"n_per_speaker": 1}})").find(">= 2"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"metrics": {"repeats": 0}})").find(">= 1"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"metrics": {"ks": [0]}})").find(">= 1"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"pairs": {"n_pairs": 0}})").find("n_pairs"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"pairs": {"similar_threshold": -0.1}})")
                .find("positive"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"frontend": {"n_mels": 0}})").find("n_mels"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"model": {"backbone_channels": 6}})")
                .find("backbone_channels"),
            std::string::npos);
}

TEST(RunConfig, LoadReportsFileProblems) {
  testing::TempDir tmp("vove-config");
  EXPECT_THROW(load_run_config((tmp / "absent.json").string()), IoError);

  std::ofstream((tmp / "bad.json")) << "{not json";
  try {
    load_run_config((tmp / "bad.json").string());
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("is not valid JSON"),
              std::string::npos);
  }
}

// ---------------------------------------------------------------------------
// End-to-end checks against the installed command-line binary. These shell
// out to the real executable so that flag parsing, config plumbing, and
// report emission are covered exactly as a user runs them.

std::filesystem::path data_dir() {
  return std::filesystem::path(VOVE_TEST_DATA_DIR);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  EXPECT_TRUE(is.good()) << "cannot open " << p;
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const vove::testing::TempDir& tmp, const std::string& tag,
                  const std::string& args) {
  std::filesystem::path out = tmp / (tag + ".out");
  std::filesystem::path err = tmp / (tag + ".err");
  std::string cmd = std::string(VOVE_CLI_PATH) + " " + args + " > " +
                    out.string() + " 2> " + err.string();
  int raw = std::system(cmd.c_str());
  CliResult r;
#ifdef _WIN32
  r.exit_code = raw;
#else
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
#endif
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// The committed toy store holds three speakers whose utterances are exact
// dyadic scalings of a per-speaker base vector, so every cosine the report
// samples is invariant to which utterances the seeded draw picks. The
// committed report bytes are therefore stable under reruns, and were
// produced by an independent brute-force oracle over the store contents.
TEST(Cli, EvalSimReproducesCommittedGoldenTwice) {
  testing::TempDir tmp("vove-cli-golden");
  std::string golden = slurp(data_dir() / "golden_eval_sim.txt");
  ASSERT_FALSE(golden.empty());

  std::string args = "eval-sim --config " +
                     (data_dir() / "toy_config.json").string() + " --store " +
                     (data_dir() / "toy_vove.store").string() +
                     " --manifest " +
                     (data_dir() / "toy_manifest.tsv").string();

  CliResult first = run_cli(tmp, "first", args + " --out " +
                                              (tmp / "report1.txt").string());
  EXPECT_EQ(first.exit_code, 0) << first.err;
  EXPECT_EQ(first.out, golden);
  EXPECT_EQ(slurp(tmp / "report1.txt"), golden);
  EXPECT_EQ(first.err, "");

  CliResult second = run_cli(tmp, "second", args);
  EXPECT_EQ(second.exit_code, 0) << second.err;
  EXPECT_EQ(second.out, first.out);
}

TEST(Cli, SeedFlagOverridesConfigSeed) {
  testing::TempDir tmp("vove-cli-seed");
  std::string args = "eval-sim --config " +
                     (data_dir() / "toy_config.json").string() + " --store " +
                     (data_dir() / "toy_vove.store").string() +
                     " --manifest " +
                     (data_dir() / "toy_manifest.tsv").string() +
                     " --seed 99";
  CliResult r = run_cli(tmp, "seeded", args);
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("seed=99\n"), std::string::npos);
  // The toy store's metrics are draw-independent, so only the echoed seed
  // may differ from the committed report.
  std::string golden = slurp(data_dir() / "golden_eval_sim.txt");
  std::string patched = r.out;
  std::size_t at = patched.find("seed=99");
  ASSERT_NE(at, std::string::npos);
  patched.replace(at, 7, "seed=17");
  EXPECT_EQ(patched, golden);
}

TEST(Cli, UnknownConfigKeyFailsBeforeWritingOutput) {
  testing::TempDir tmp("vove-cli-badcfg");
  std::ofstream((tmp / "bad.json")) << R"({"metrics": {"respeats": 3}})";
  std::filesystem::path out = tmp / "report.txt";
  CliResult r = run_cli(tmp, "bad",
                        "eval-sim --config " + (tmp / "bad.json").string() +
                            " --store " +
                            (data_dir() / "toy_vove.store").string() +
                            " --manifest " +
                            (data_dir() / "toy_manifest.tsv").string() +
                            " --out " + out.string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("unknown key 'metrics.respeats'"), std::string::npos);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(out));
}

TEST(Cli, EvalClassOnIdenticalStoresIsPerfect) {
  testing::TempDir tmp("vove-cli-class");
  CliResult r = run_cli(tmp, "class",
                        "eval-class --config " +
                            (data_dir() / "toy_config.json").string() +
                            " --pred " +
                            (data_dir() / "toy_vove.store").string() +
                            " --gt " +
                            (data_dir() / "toy_vove.store").string());
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("tau=0.300000\n"), std::string::npos);
  EXPECT_NE(r.out.find("f1=1.000000"), std::string::npos);
  EXPECT_NE(r.out.find("precision=1.000000"), std::string::npos);
  EXPECT_NE(r.out.find("recall=1.000000"), std::string::npos);
}

TEST(Cli, MissingSubcommandOrInputFails) {
  testing::TempDir tmp("vove-cli-miss");
  CliResult none = run_cli(tmp, "none", "");
  EXPECT_NE(none.exit_code, 0);

  CliResult gone = run_cli(tmp, "gone",
                           "eval-sim --store " +
                               (tmp / "absent.store").string() +
                               " --manifest " +
                               (data_dir() / "toy_manifest.tsv").string());
  EXPECT_EQ(gone.exit_code, 1);
  EXPECT_NE(gone.err.find("error:"), std::string::npos);
}

}  // namespace
}  // namespace vove
