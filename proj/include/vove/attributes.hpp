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
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vove/error.hpp"

namespace vove {

inline constexpr std::size_t kNumAttributes = 44;

// Canonical attribute order: alphabetical. Vector index i always refers to
// attribute_name(i); every store, label file and report uses this ordering.
inline constexpr std::array<std::string_view, kNumAttributes> kAttributeNames = {
    "adult-like", "bright",     "calm",       "clear",         "cool",
    "cute",       "dark",       "elegant",    "feminine",      "fluent",
    "friendly",   "gender-neutral", "halting", "hard",         "intellectual",
    "intense",    "kind",       "light",      "lively",        "masculine",
    "mature",     "middle-aged", "modest",    "muffled",       "nasal",
    "old",        "powerful",   "raspy",      "reassuring",    "refreshing",
    "relaxed",    "sexy",       "sharp",      "sincere",       "soft",
    "strict",     "sweet",      "tensed",     "thick",         "thin",
    "unique",     "weak",       "wild",       "young"};

inline std::string_view attribute_name(std::size_t index) {
  if (index >= kNumAttributes)
    throw ValidationError("attribute index out of range: " +
                          std::to_string(index));
  return kAttributeNames[index];
}

// Name -> index lookup; throws on unknown names.
inline std::size_t attribute_index(std::string_view name) {
  for (std::size_t i = 0; i < kNumAttributes; ++i)
    if (kAttributeNames[i] == name) return i;
  throw ValidationError("unknown attribute name: " + std::string(name));
}

// FNV-1a 64 over the canonical names joined by '\n'. Stamped into embedding
// stores and checkpoints so a reordered or edited schema is caught on load.
inline std::uint64_t schema_hash() {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](char c) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ULL;
  };
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    if (i) mix('\n');
    for (char c : kAttributeNames[i]) mix(c);
  }
  return h;
}

inline std::string schema_hash_hex() {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(schema_hash()));
  return std::string(buf);
}

// Annotator intensity for one attribute. Total order: Very > Normal >
// Slightly > None.
enum class IntensityLevel : std::uint8_t { None = 0, Slightly = 1, Normal = 2, Very = 3 };

inline double intensity_weight(IntensityLevel level) {
  switch (level) {
    case IntensityLevel::Very: return 1.5;
    case IntensityLevel::Normal: return 1.25;
    case IntensityLevel::Slightly: return 0.5;
    case IntensityLevel::None: return 0.0;
  }
  throw ValidationError("invalid intensity level");
}

inline std::string_view intensity_token(IntensityLevel level) {
  switch (level) {
    case IntensityLevel::Very: return "very";
    case IntensityLevel::Normal: return "normal";
    case IntensityLevel::Slightly: return "slightly";
    case IntensityLevel::None: return "none";
  }
  throw ValidationError("invalid intensity level");
}

inline IntensityLevel parse_intensity(std::string_view token) {
  if (token == "very") return IntensityLevel::Very;
  if (token == "normal") return IntensityLevel::Normal;
  if (token == "slightly") return IntensityLevel::Slightly;
  if (token == "none") return IntensityLevel::None;
  throw ValidationError("unknown intensity token: " + std::string(token));
}

inline constexpr std::size_t kAnnotatorsPerAttribute = 3;

// One speaker's raw annotation: 44 attributes x 3 annotators.
struct SpeakerAnnotation {
  std::string speaker_id;
  std::array<std::array<IntensityLevel, kAnnotatorsPerAttribute>, kNumAttributes>
      labels;
};

// A 44-dimensional vector in [0,1]: either a soft ground-truth label y or a
// Vo-Ve embedding v.
struct AttributeVector {
  std::array<double, kNumAttributes> values{};

  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }

  void validate() const {
    for (std::size_t i = 0; i < kNumAttributes; ++i) {
      double v = values[i];
      if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError("attribute value out of [0,1] at '" +
                              std::string(kAttributeNames[i]) +
                              "': " + std::to_string(v));
    }
  }
};

// Three annotator intensities -> one soft degree: clip((w1+w2+w3)/3, 0, 1).
inline double soft_degree(IntensityLevel l1, IntensityLevel l2,
                          IntensityLevel l3) {
  double s = intensity_weight(l1) + intensity_weight(l2) + intensity_weight(l3);
  return std::clamp(s / 3.0, 0.0, 1.0);
}

// Full per-speaker conversion to the soft ground-truth label y.
inline AttributeVector annotation_to_soft_label(const SpeakerAnnotation& ann) {
  AttributeVector y;
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    const auto& row = ann.labels[i];
    y[i] = soft_degree(row[0], row[1], row[2]);
  }
  return y;
}

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace detail

// Annotation file: one speaker per line,
//   speaker_id<TAB>t,t,t<TAB>...   (44 comma-separated intensity triples,
// attributes in canonical order). Blank lines are rejected, not skipped:
// every line must be a record.
inline std::vector<SpeakerAnnotation> read_annotations(std::istream& in) {
  std::vector<SpeakerAnnotation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = detail::split(line, '\t');
    if (fields.size() != 1 + kNumAttributes)
      throw ParseError("annotation record needs speaker_id + " +
                           std::to_string(kNumAttributes) + " triples, got " +
                           std::to_string(fields.size()) + " fields",
                       lineno);
    SpeakerAnnotation ann;
    ann.speaker_id = fields[0];
    if (ann.speaker_id.empty())
      throw ParseError("empty speaker_id", lineno);
    for (std::size_t i = 0; i < kNumAttributes; ++i) {
      auto toks = detail::split(fields[1 + i], ',');
      if (toks.size() != kAnnotatorsPerAttribute)
        throw ParseError("attribute '" + std::string(kAttributeNames[i]) +
                             "' needs " +
                             std::to_string(kAnnotatorsPerAttribute) +
                             " intensity tokens, got " +
                             std::to_string(toks.size()),
                         lineno);
      for (std::size_t a = 0; a < kAnnotatorsPerAttribute; ++a) {
        try {
          ann.labels[i][a] = parse_intensity(toks[a]);
        } catch (const ValidationError& e) {
          throw ParseError(e.what(), lineno);
        }
      }
    }
    out.push_back(std::move(ann));
  }
  return out;
}

inline std::vector<SpeakerAnnotation> read_annotations_file(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open annotation file: " + path);
  return read_annotations(in);
}

// Label lines: speaker_id + 44 values with 6 fractional digits, tab-separated.
inline void write_soft_label(std::ostream& out, const std::string& speaker_id,
                             const AttributeVector& y) {
  out << speaker_id;
  char buf[16];
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f", y[i]);
    out << '\t' << buf;
  }
  out << '\n';
}

inline std::map<std::string, AttributeVector> read_soft_labels(
    std::istream& in) {
  std::map<std::string, AttributeVector> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = detail::split(line, '\t');
    if (fields.size() != 1 + kNumAttributes)
      throw ParseError("label record needs speaker_id + " +
                           std::to_string(kNumAttributes) + " values, got " +
                           std::to_string(fields.size()) + " fields",
                       lineno);
    AttributeVector y;
    for (std::size_t i = 0; i < kNumAttributes; ++i) {
      try {
        std::size_t used = 0;
        y[i] = std::stod(fields[1 + i], &used);
        if (used != fields[1 + i].size()) throw std::invalid_argument("trail");
      } catch (const std::exception&) {
        throw ParseError("bad label value '" + fields[1 + i] + "'", lineno);
      }
    }
    try {
      y.validate();
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), lineno);
    }
    if (!out.emplace(fields[0], y).second)
      throw ParseError("duplicate speaker_id '" + fields[0] + "'", lineno);
  }
  return out;
}

inline std::map<std::string, AttributeVector> read_soft_labels_file(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open label file: " + path);
  return read_soft_labels(in);
}

}  // namespace vove
