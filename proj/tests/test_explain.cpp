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

#include "vove/explain.hpp"

#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "vove/rng.hpp"

namespace vove {
namespace {

std::vector<double> zeros() { return std::vector<double>(kNumAttributes, 0.0); }

TEST(Profile, SortsByStrengthThenCanonicalOrder) {
  auto v = zeros();
  v[attribute_index("sweet")] = 0.9;
  v[attribute_index("calm")] = 0.7;
  v[attribute_index("bright")] = 0.7;  // ties with calm; bright sorts first
  v[attribute_index("dark")] = 0.4;    // below default floor
  auto p = profile(v);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0].name, "sweet");
  EXPECT_EQ(p[1].name, "bright");
  EXPECT_EQ(p[2].name, "calm");
  EXPECT_DOUBLE_EQ(p[0].value, 0.9);
}

TEST(Profile, FloorIsInclusiveAndTopNCaps) {
  auto v = zeros();
  v[3] = 0.5;  // exactly at the floor
  v[7] = 0.8;
  v[9] = 0.6;
  auto p = profile(v, 0.5);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[2].index, 3u);

  auto capped = profile(v, 0.5, 2);
  ASSERT_EQ(capped.size(), 2u);
  EXPECT_EQ(capped[0].index, 7u);
  EXPECT_EQ(capped[1].index, 9u);

  EXPECT_TRUE(profile(zeros(), 0.5).empty());
  EXPECT_EQ(profile(zeros(), 0.0).size(), kNumAttributes);  // floor 0 keeps all
}

TEST(Profile, RejectsWrongShapeAndNonFinite) {
  std::vector<double> short_v(10, 0.5);
  EXPECT_THROW(profile(short_v), ShapeError);
  auto v = zeros();
  v[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(profile(v), ValidationError);
}

TEST(DiffReportTest, OrdersByAbsoluteDelta) {
  auto a = zeros();
  auto b = zeros();
  a[attribute_index("sweet")] = 0.9;
  b[attribute_index("sweet")] = 0.1;  // delta +0.8
  a[attribute_index("calm")] = 0.2;
  b[attribute_index("calm")] = 0.85;  // delta -0.65
  a[attribute_index("raspy")] = 0.5;
  b[attribute_index("raspy")] = 0.4;  // delta +0.1
  a[0] = 0.05;                        // keep both vectors nonzero elsewhere
  b[0] = 0.05;
  auto rep = diff_report(a, b);
  ASSERT_EQ(rep.entries.size(), kNumAttributes);
  EXPECT_EQ(rep.entries[0].name, "sweet");
  EXPECT_NEAR(rep.entries[0].delta, 0.8, 1e-12);
  EXPECT_EQ(rep.entries[1].name, "calm");
  EXPECT_NEAR(rep.entries[1].delta, -0.65, 1e-12);
  EXPECT_EQ(rep.entries[2].name, "raspy");
  ASSERT_TRUE(rep.cosine_sim.has_value());
  EXPECT_NEAR(*rep.cosine_sim, cosine(a, b), 1e-12);
}

TEST(DiffReportTest, ZeroDeltasTieInCanonicalOrder) {
  auto a = zeros();
  auto b = zeros();
  a[5] = b[5] = 0.3;  // identical vectors -> all deltas zero
  auto rep = diff_report(a, b);
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    EXPECT_EQ(rep.entries[i].index, i);
    EXPECT_DOUBLE_EQ(rep.entries[i].delta, 0.0);
  }
  EXPECT_NEAR(*rep.cosine_sim, 1.0, 1e-12);
}

TEST(DiffReportTest, SwappingArgumentsNegatesDeltas) {
  Pcg32 rng(77, 0);
  std::vector<double> a(kNumAttributes), b(kNumAttributes);
  for (auto& x : a) x = rng.next_double();
  for (auto& x : b) x = rng.next_double();
  auto ab = diff_report(a, b);
  auto ba = diff_report(b, a);
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    // Same ordering (|delta| ties broken by index either way) with the sign
    // and the two value columns flipped.
    EXPECT_EQ(ab.entries[i].index, ba.entries[i].index);
    EXPECT_DOUBLE_EQ(ab.entries[i].delta, -ba.entries[i].delta);
    EXPECT_DOUBLE_EQ(ab.entries[i].value_a, ba.entries[i].value_b);
  }
  EXPECT_DOUBLE_EQ(*ab.cosine_sim, *ba.cosine_sim);
}

TEST(DiffReportTest, ZeroVectorYieldsNoteInsteadOfError) {
  auto a = zeros();
  auto b = zeros();
  b[2] = 0.4;
  auto rep = diff_report(a, b);
  EXPECT_FALSE(rep.cosine_sim.has_value());
  EXPECT_NE(rep.note.find("zero vector"), std::string::npos);
  ASSERT_EQ(rep.entries.size(), kNumAttributes);
  EXPECT_EQ(rep.entries[0].index, 2u);

  std::string text = render_diff(rep);
  EXPECT_NE(text.find("cosine=undefined"), std::string::npos);
}

TEST(DiffReportTest, MixedPrecisionInputsWiden) {
  std::vector<float> a(kNumAttributes, 0.25f);
  std::vector<double> b(kNumAttributes, 0.75);
  auto rep = diff_report(a, b);
  EXPECT_NEAR(rep.entries[0].delta, -0.5, 1e-7);
  EXPECT_NEAR(*rep.cosine_sim, 1.0, 1e-12);  // parallel vectors
}

TEST(Render, ProfileAndDiffFormat) {
  auto v = zeros();
  v[attribute_index("bright")] = 0.75;
  std::string p = render_profile(profile(v));
  EXPECT_EQ(p, "bright=0.750000\n");
  EXPECT_EQ(render_profile(profile(zeros())),
            "(no attribute at or above the floor)\n");

  auto a = zeros();
  auto b = zeros();
  a[attribute_index("sweet")] = 1.0;
  b[attribute_index("sweet")] = 0.5;
  auto rep = diff_report(a, b);
  std::string d = render_diff(rep, 1);
  EXPECT_NE(d.find("attribute\ta\tb\tdelta\n"), std::string::npos);
  EXPECT_NE(d.find("sweet\t1.000000\t0.500000\t+0.500000\n"),
            std::string::npos);
  EXPECT_NE(d.find("cosine=1.000000\n"), std::string::npos);
  // top_n = 1 keeps the header, one row, and the cosine line.
  EXPECT_EQ(std::count(d.begin(), d.end(), '\n'), 3);
}

}  // namespace
}  // namespace vove
