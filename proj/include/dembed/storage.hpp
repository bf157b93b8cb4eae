// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

// On-disk artifacts: atomic writes, SHA-256 digests, line-delimited JSON
// manifests and triplet files, CEVX embedding tables, TSV task files.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dembed/corpus.hpp"
#include "dembed/triplets.hpp"

namespace dembed::storage {

namespace fs = std::filesystem;

struct AtomicWriteHooks {
  /// Runs after the temporary file is complete and before the rename. A
  /// throwing hook aborts the write; the temporary file is removed.
  std::function<void(const fs::path& temp)> before_rename;
};

/// Writes to a sibling temporary file, then renames over `path`.
void write_atomic(const fs::path& path, std::string_view bytes,
                  const AtomicWriteHooks& hooks = {});

std::string read_file(const fs::path& path);

std::string sha256_hex(std::string_view bytes);
/// SHA-256 of a file's bytes, lowercase hex.
std::string digest(const fs::path& path);

// Manifest: one {sent_id, source_name, text, char_len, split} object per line.
std::string manifest_to_jsonl(const corpus::CorpusManifest& manifest);
corpus::CorpusManifest manifest_from_jsonl(std::string_view text);
void write_manifest(const fs::path& path, const corpus::CorpusManifest& manifest);
corpus::CorpusManifest read_manifest(const fs::path& path);

// Triplets: one {anchor_id, anchor_text, positive_text, negative_id,
// negative_text, split} object per line.
std::string triplets_to_jsonl(std::span<const triplets::Triplet> items);
std::vector<triplets::Triplet> triplets_from_jsonl(std::string_view text);
void write_triplets(const fs::path& path, std::span<const triplets::Triplet> items);
std::vector<triplets::Triplet> read_triplets(const fs::path& path);

/// Raw documents from a directory (*.txt and *.jsonl, recursively, sorted by
/// path) or from a single file. A .txt file becomes one document whose
/// doc_id is its path relative to the root and whose source_name is its
/// top-level directory, or its stem when it sits at the root.
std::vector<corpus::RawDocument> read_documents(const fs::path& input);
std::vector<corpus::RawDocument> documents_from_jsonl(std::string_view text);

// Embedding table ("CEVX"): magic, u32 version, u32 dim, u64 count, then
// count*dim f32 LE. Ids live in "<path>.ids", one per line, same order.
inline constexpr std::uint32_t kEmbeddingVersion = 1;

struct EmbeddingTable {
  std::vector<std::string> ids;
  std::size_t dim = 0;
  std::vector<float> values;  // row-major, ids.size() x dim

  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;
};

fs::path ids_path(const fs::path& embeddings_path);
std::string serialize_embeddings(const EmbeddingTable& table);
EmbeddingTable parse_embeddings(std::string_view bytes, std::vector<std::string> ids);
void write_embeddings(const fs::path& path, const EmbeddingTable& table);
EmbeddingTable read_embeddings(const fs::path& path);

// Task files.
std::vector<std::pair<std::string, std::string>> read_pairs_tsv(const fs::path& path);
struct Qrel {
  std::string query_id;
  std::string cand_id;
  int grade = 0;
};
std::vector<Qrel> read_qrels_tsv(const fs::path& path);
struct StsRow {
  std::string id_a;
  std::string id_b;
  double score = 0.0;
};
std::vector<StsRow> read_sts_tsv(const fs::path& path);
void write_pairs_tsv(const fs::path& path,
                     std::span<const std::pair<std::string, std::string>> pairs);

// Little-endian primitives shared by the binary formats.
void put_u8(std::string& out, std::uint8_t v);
void put_u16(std::string& out, std::uint16_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f32(std::string& out, float v);

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}
  bool has(std::size_t n) const noexcept { return bytes_.size() - pos_ >= n; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  std::string_view take(std::size_t n);

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace dembed::storage
