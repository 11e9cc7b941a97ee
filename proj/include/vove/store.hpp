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

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vove/attributes.hpp"
#include "vove/error.hpp"

namespace vove {

enum class Gender : std::uint8_t { F, M, Unknown };

inline std::string_view gender_token(Gender g) {
  switch (g) {
    case Gender::F: return "F";
    case Gender::M: return "M";
    case Gender::Unknown: return "unknown";
  }
  throw ValidationError("invalid gender value");
}

inline Gender parse_gender(std::string_view token) {
  if (token == "F") return Gender::F;
  if (token == "M") return Gender::M;
  if (token == "unknown") return Gender::Unknown;
  throw ValidationError("unknown gender token: " + std::string(token));
}

// One audio file plus the metadata the metrics need.
struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  std::string text_id;
  Gender gender = Gender::Unknown;
  std::string audio_path;
};

inline constexpr std::string_view kManifestMagic = "VOVEMANIFEST";
inline constexpr int kManifestVersion = 1;

// Utterance manifest with a unique-id index.
struct Manifest {
  std::vector<UtteranceRecord> records;

  const UtteranceRecord* find(const std::string& utterance_id) const {
    for (const auto& r : records)
      if (r.utterance_id == utterance_id) return &r;
    return nullptr;
  }

  void validate() const {
    std::map<std::string, int> seen;
    for (const auto& r : records) {
      if (r.utterance_id.empty())
        throw ValidationError("manifest: empty utterance_id");
      if (r.speaker_id.empty())
        throw ValidationError("manifest: empty speaker_id for utterance '" +
                              r.utterance_id + "'");
      if (++seen[r.utterance_id] > 1)
        throw ValidationError("manifest: duplicate utterance_id '" +
                              r.utterance_id + "'");
    }
  }
};

// Manifest file: magic line, then one utterance per line,
//   utterance_id<TAB>speaker_id<TAB>text_id<TAB>gender<TAB>audio_path
inline Manifest read_manifest(std::istream& in, const std::string& name) {
  Manifest m;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line))
    throw ParseError("empty manifest: " + name, 1);
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::istringstream magic(line);
  std::string tag;
  int version = 0;
  magic >> tag >> version;
  if (tag != kManifestMagic)
    throw ParseError("bad manifest magic in " + name, 1);
  if (version != kManifestVersion)
    throw ParseError("unsupported manifest version " + std::to_string(version),
                     1);
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = detail::split(line, '\t');
    if (fields.size() != 5)
      throw ParseError("manifest record needs 5 tab-separated fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    UtteranceRecord r;
    r.utterance_id = fields[0];
    r.speaker_id = fields[1];
    r.text_id = fields[2];
    try {
      r.gender = parse_gender(fields[3]);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), lineno);
    }
    r.audio_path = fields[4];
    m.records.push_back(std::move(r));
  }
  try {
    m.validate();
  } catch (const ValidationError& e) {
    throw ParseError(std::string(e.what()) + " in " + name);
  }
  return m;
}

inline Manifest read_manifest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + path);
  return read_manifest(in, path);
}

inline void write_manifest(std::ostream& out, const Manifest& m) {
  out << kManifestMagic << ' ' << kManifestVersion << '\n';
  for (const auto& r : m.records)
    out << r.utterance_id << '\t' << r.speaker_id << '\t' << r.text_id << '\t'
        << gender_token(r.gender) << '\t' << r.audio_path << '\n';
}

inline void write_manifest_file(const std::string& path, const Manifest& m) {
  m.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + path);
  write_manifest(out, m);
}

// One fixed-dimension embedding, keyed by utterance. The owning store's
// header carries the model id and dimension.
struct EmbeddingRecord {
  std::string utterance_id;
  std::vector<float> vector;
};

struct StoreHeader {
  std::string model_id;
  int dim = 0;
  // Canonical attribute-order hash; present exactly when dim == 44.
  std::optional<std::string> schema;
};

inline constexpr std::string_view kStoreMagic = "VOVESTORE";
inline constexpr int kStoreVersion = 1;
inline constexpr std::string_view kVoveModelId = "vove";

// A persisted set of embeddings from one model. Immutable once written.
struct EmbeddingStore {
  StoreHeader header;
  std::vector<EmbeddingRecord> records;

  const EmbeddingRecord* find(const std::string& utterance_id) const {
    auto it = index_.find(utterance_id);
    return it == index_.end() ? nullptr : &records[it->second];
  }

  void rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < records.size(); ++i)
      if (!index_.emplace(records[i].utterance_id, i).second)
        throw ValidationError("store: duplicate utterance_id '" +
                              records[i].utterance_id + "'");
  }

  void validate() {
    if (header.model_id.empty())
      throw ValidationError("store: empty model_id");
    if (header.dim < 1) throw ValidationError("store: dim must be >= 1");
    const bool is_vove = header.model_id == kVoveModelId;
    if (is_vove && header.dim != static_cast<int>(kNumAttributes))
      throw ValidationError("store: model 'vove' requires dim 44, got " +
                            std::to_string(header.dim));
    if (header.dim == static_cast<int>(kNumAttributes)) {
      if (!header.schema) header.schema = schema_hash_hex();
      if (is_vove && *header.schema != schema_hash_hex())
        throw ValidationError("store: schema hash mismatch (" +
                              *header.schema + " != " + schema_hash_hex() +
                              ")");
    } else if (header.schema) {
      throw ValidationError("store: schema hash only valid for dim 44");
    }
    for (const auto& r : records) {
      if (r.utterance_id.empty())
        throw ValidationError("store: empty utterance_id");
      if (static_cast<int>(r.vector.size()) != header.dim)
        throw ValidationError("store: record '" + r.utterance_id + "' has " +
                              std::to_string(r.vector.size()) +
                              " components, header says " +
                              std::to_string(header.dim));
      for (float v : r.vector) {
        if (!std::isfinite(v))
          throw ValidationError("store: non-finite component in '" +
                                r.utterance_id + "'");
        if (is_vove && (v < 0.0f || v > 1.0f))
          throw ValidationError("store: vove component out of [0,1] in '" +
                                r.utterance_id + "'");
      }
    }
    rebuild_index();
  }

 private:
  std::map<std::string, std::size_t> index_;
};

namespace detail {

inline void put_f32le(std::string& out, float f) {
  std::uint32_t u = std::bit_cast<std::uint32_t>(f);
  out.push_back(static_cast<char>(u & 0xff));
  out.push_back(static_cast<char>((u >> 8) & 0xff));
  out.push_back(static_cast<char>((u >> 16) & 0xff));
  out.push_back(static_cast<char>((u >> 24) & 0xff));
}

inline float get_f32le(const char* p) {
  const auto* b = reinterpret_cast<const std::uint8_t*>(p);
  std::uint32_t u = static_cast<std::uint32_t>(b[0]) |
                    (static_cast<std::uint32_t>(b[1]) << 8) |
                    (static_cast<std::uint32_t>(b[2]) << 16) |
                    (static_cast<std::uint32_t>(b[3]) << 24);
  return std::bit_cast<float>(u);
}

}  // namespace detail

// Store layout (version 1): a text header
//   VOVESTORE 1\n  model_id <s>\n  dim <D>\n  count <N>\n  [schema <hex>\n]
//   data\n
// followed by N binary records: u16 LE id length, id bytes, D f32 LE values.
inline void write_store(const EmbeddingStore& store_in,
                        const std::string& path) {
  EmbeddingStore store = store_in;
  store.validate();
  std::string out;
  out += std::string(kStoreMagic) + " " + std::to_string(kStoreVersion) + "\n";
  out += "model_id " + store.header.model_id + "\n";
  out += "dim " + std::to_string(store.header.dim) + "\n";
  out += "count " + std::to_string(store.records.size()) + "\n";
  if (store.header.schema) out += "schema " + *store.header.schema + "\n";
  out += "data\n";
  for (const auto& r : store.records) {
    if (r.utterance_id.size() > 0xffff)
      throw ValidationError("store: utterance_id longer than 65535 bytes");
    auto len = static_cast<std::uint16_t>(r.utterance_id.size());
    out.push_back(static_cast<char>(len & 0xff));
    out.push_back(static_cast<char>((len >> 8) & 0xff));
    out += r.utterance_id;
    for (float v : r.vector) detail::put_f32le(out, v);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write store: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path);
}

inline EmbeddingStore read_store(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open store: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());

  std::size_t pos = 0, lineno = 0;
  auto next_line = [&]() {
    ++lineno;
    std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string::npos)
      throw ParseError("truncated store header in " + path, lineno);
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };

  {
    std::istringstream magic(next_line());
    std::string tag;
    int version = 0;
    magic >> tag >> version;
    if (tag != kStoreMagic)
      throw ParseError("bad store magic in " + path, 1);
    if (version != kStoreVersion)
      throw ParseError("unsupported store version " + std::to_string(version),
                       1);
  }

  EmbeddingStore store;
  std::int64_t count = -1;
  for (;;) {
    std::string line = next_line();
    if (line == "data") break;
    std::istringstream kv(line);
    std::string key, value;
    kv >> key >> value;
    if (key == "model_id")
      store.header.model_id = value;
    else if (key == "dim")
      store.header.dim = std::stoi(value);
    else if (key == "count")
      count = std::stoll(value);
    else if (key == "schema")
      store.header.schema = value;
    else
      throw ParseError("unknown store header key '" + key + "'", lineno);
  }
  if (count < 0) throw ParseError("store header missing count", lineno);

  store.records.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    auto need = [&](std::size_t n) {
      if (pos + n > bytes.size())
        throw ParseError("truncated store record " + std::to_string(i) +
                         " in " + path);
    };
    need(2);
    std::uint16_t len = static_cast<std::uint8_t>(bytes[pos]) |
                        (static_cast<std::uint16_t>(
                             static_cast<std::uint8_t>(bytes[pos + 1]))
                         << 8);
    pos += 2;
    need(len);
    EmbeddingRecord r;
    r.utterance_id = bytes.substr(pos, len);
    pos += len;
    need(static_cast<std::size_t>(store.header.dim) * 4);
    r.vector.resize(static_cast<std::size_t>(store.header.dim));
    for (int d = 0; d < store.header.dim; ++d) {
      r.vector[static_cast<std::size_t>(d)] = detail::get_f32le(&bytes[pos]);
      pos += 4;
    }
    store.records.push_back(std::move(r));
  }
  if (pos != bytes.size())
    throw ParseError("trailing bytes after last store record in " + path);
  try {
    store.validate();
  } catch (const ValidationError& e) {
    throw ParseError(std::string(e.what()) + " in " + path);
  }
  return store;
}

// One embedding with its manifest metadata attached.
struct JoinedRecord {
  const EmbeddingRecord* embedding;
  const UtteranceRecord* meta;
};

// Joins a store against a manifest. Every store utterance must appear in the
// manifest; the join preserves store order.
inline std::vector<JoinedRecord> join_manifest(const EmbeddingStore& store,
                                               const Manifest& manifest) {
  std::map<std::string, const UtteranceRecord*> by_id;
  for (const auto& r : manifest.records) by_id[r.utterance_id] = &r;
  std::vector<JoinedRecord> out;
  out.reserve(store.records.size());
  std::vector<std::string> missing;
  for (const auto& r : store.records) {
    auto it = by_id.find(r.utterance_id);
    if (it == by_id.end())
      missing.push_back(r.utterance_id);
    else
      out.push_back(JoinedRecord{&r, it->second});
  }
  if (!missing.empty()) {
    std::string msg = "store utterances missing from manifest:";
    for (const auto& id : missing) msg += " '" + id + "'";
    throw ValidationError(msg);
  }
  return out;
}

}  // namespace vove
