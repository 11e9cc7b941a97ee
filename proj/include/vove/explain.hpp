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
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vove/attributes.hpp"
#include "vove/error.hpp"
#include "vove/metrics.hpp"

namespace vove {

namespace detail {

template <typename Seq>
std::vector<double> checked_attribute_values(const Seq& v, const char* who) {
  if (v.size() != kNumAttributes)
    throw ShapeError(std::string(who) + ": expected " +
                     std::to_string(kNumAttributes) + " attribute values, got " +
                     std::to_string(v.size()));
  std::vector<double> out(kNumAttributes);
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    out[i] = static_cast<double>(v[i]);
    if (!std::isfinite(out[i]))
      throw ValidationError(std::string(who) + ": non-finite value for '" +
                            std::string(attribute_name(i)) + "'");
  }
  return out;
}

}  // namespace detail

// One named attribute with its strength.
struct ProfileEntry {
  std::size_t index;
  std::string_view name;
  double value;
};

// Attributes at or above `floor`, strongest first; equal strengths keep
// canonical attribute order. `top_n` == 0 means no cap.
template <typename Seq>
std::vector<ProfileEntry> profile(const Seq& v, double floor = 0.5,
                                  std::size_t top_n = 0) {
  auto values = detail::checked_attribute_values(v, "profile");
  std::vector<ProfileEntry> out;
  for (std::size_t i = 0; i < kNumAttributes; ++i)
    if (values[i] >= floor) out.push_back({i, attribute_name(i), values[i]});
  std::stable_sort(out.begin(), out.end(),
                   [](const ProfileEntry& a, const ProfileEntry& b) {
                     if (a.value != b.value) return a.value > b.value;
                     return a.index < b.index;
                   });
  if (top_n > 0 && out.size() > top_n) out.resize(top_n);
  return out;
}

// One attribute's contribution to the difference between two voices.
struct DiffEntry {
  std::size_t index;
  std::string_view name;
  double value_a;
  double value_b;
  double delta;  // value_a - value_b
};

// Full attribute-wise comparison of two voices: every attribute ordered by
// how strongly it separates them, plus overall cosine similarity (undefined
// for a zero vector, reported as a note instead of a failure).
struct DiffReport {
  std::vector<DiffEntry> entries;  // all attributes, largest |delta| first
  std::optional<double> cosine_sim;
  std::string note;
};

template <typename SeqA, typename SeqB>
DiffReport diff_report(const SeqA& a, const SeqB& b) {
  auto va = detail::checked_attribute_values(a, "diff_report");
  auto vb = detail::checked_attribute_values(b, "diff_report");
  DiffReport rep;
  rep.entries.reserve(kNumAttributes);
  for (std::size_t i = 0; i < kNumAttributes; ++i)
    rep.entries.push_back(
        {i, attribute_name(i), va[i], vb[i], va[i] - vb[i]});
  std::stable_sort(rep.entries.begin(), rep.entries.end(),
                   [](const DiffEntry& x, const DiffEntry& y) {
                     const double ax = std::fabs(x.delta);
                     const double ay = std::fabs(y.delta);
                     if (ax != ay) return ax > ay;
                     return x.index < y.index;
                   });
  bool a_zero = std::all_of(va.begin(), va.end(),
                            [](double x) { return x == 0.0; });
  bool b_zero = std::all_of(vb.begin(), vb.end(),
                            [](double x) { return x == 0.0; });
  if (a_zero || b_zero)
    rep.note = "cosine undefined: zero vector";
  else
    rep.cosine_sim = cosine(va, vb);
  return rep;
}

inline std::string render_profile(const std::vector<ProfileEntry>& entries) {
  std::string out;
  char buf[80];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof(buf), "%s=%.6f\n", std::string(e.name).c_str(),
                  e.value);
    out += buf;
  }
  if (entries.empty()) out = "(no attribute at or above the floor)\n";
  return out;
}

// Tab-separated lines `attribute  a  b  delta`; `top_n` == 0 renders all 44.
inline std::string render_diff(const DiffReport& rep, std::size_t top_n = 0) {
  std::string out = "attribute\ta\tb\tdelta\n";
  char buf[120];
  std::size_t n = rep.entries.size();
  if (top_n > 0) n = std::min(n, top_n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = rep.entries[i];
    std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%.6f\t%+.6f\n",
                  std::string(e.name).c_str(), e.value_a, e.value_b, e.delta);
    out += buf;
  }
  if (rep.cosine_sim) {
    std::snprintf(buf, sizeof(buf), "cosine=%.6f\n", *rep.cosine_sim);
    out += buf;
  } else {
    out += "cosine=undefined\t# " + rep.note + "\n";
  }
  return out;
}

}  // namespace vove
