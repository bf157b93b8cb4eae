// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

// Corpus preparation: cleaning, sentence segmentation, length filtering,
// exact-match deduplication, per-source train/val(/test) splitting and
// corpus statistics.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dembed/tokenizer.hpp"

namespace dembed::corpus {

enum class Split { train, val, test, unassigned };

std::string_view split_name(Split split) noexcept;
/// Throws Errc::invalid_argument on an unknown name.
Split parse_split(std::string_view name);

struct RawDocument {
  std::string doc_id;
  std::string source_name;
  std::string text;
};

struct SentenceRecord {
  std::string sent_id;
  std::string source_name;
  std::string text;
  std::size_t char_len = 0;
  Split split = Split::unassigned;

  friend bool operator==(const SentenceRecord&, const SentenceRecord&) = default;
};

struct CorpusManifest {
  std::vector<SentenceRecord> records;
  std::map<std::string, std::size_t> per_source_counts;
  std::uint64_t seed = 0;
};

struct CorpusStats {
  std::size_t sentence_count = 0;
  std::size_t word_count = 0;
  std::size_t unique_term_count = 0;
  std::size_t token_count = 0;
  double mean_len_tokens = 0.0;
  double sd_len_tokens = 0.0;
};

/// Version tag of the segmentation abbreviation list below.
inline constexpr std::string_view kAbbreviationListVersion = "abbrev-v1";

/// Tokens ending in '.' that never terminate a sentence. Single uppercase
/// initials ("J.") are also exempt.
std::span<const std::string_view> abbreviation_list() noexcept;

/// Number of Unicode code points in a UTF-8 string (continuation bytes are
/// not counted).
std::size_t utf8_length(std::string_view text) noexcept;

/// Applies, in order: markup tag removal, markdown stripping, bracketed
/// numeric citation removal, page-number line removal, whitespace collapse
/// and trim. The sequence is repeated until the text stops changing, so the
/// function is idempotent.
std::string clean_text(std::string_view raw);

/// Splits raw text on blank-line paragraph boundaries.
std::vector<std::string> split_paragraphs(std::string_view text);

std::vector<std::string> segment_sentences(std::string_view text);

std::vector<std::string> filter_short(std::vector<std::string> sentences,
                                      std::size_t min_chars = 20);

/// Lowercase, whitespace-collapsed, terminal punctuation stripped.
std::string dedup_key(std::string_view text);

/// Keeps the first record of each dedup_key, preserving order.
std::vector<SentenceRecord> deduplicate(std::vector<SentenceRecord> records);

/// Rebuilds per_source_counts from records.
void recount_sources(CorpusManifest& manifest);

/// Per source: seeded shuffle, first round(train_frac * n) train, next
/// round(test_frac * n) test, remainder val. Rounding is half-up.
CorpusManifest stratified_split(CorpusManifest manifest, double train_frac, std::uint64_t seed,
                                double test_frac = 0.0);

CorpusStats corpus_stats(const CorpusManifest& manifest, const encoder::Tokenizer& tokenizer);

struct PrepareOptions {
  std::size_t min_chars = 20;
  double train_frac = 0.9;
  double test_frac = 0.0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Whole pipeline from raw documents to a split manifest. Documents are
/// ordered by source_name (stable), sentence ids are "<doc_id>:<n>".
CorpusManifest prepare_corpus(std::span<const RawDocument> documents,
                              const PrepareOptions& options);

}  // namespace dembed::corpus
