// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace dembed::encoder {

using TokenId = std::uint32_t;

inline constexpr std::size_t kDefaultVocabSize = 16384;

/// 64-bit FNV-1a over the raw bytes.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

/// Hashed-vocabulary tokenizer. Text is ASCII-lowercased and split on runs
/// of ASCII characters that are not letters or digits; bytes >= 0x80 are kept
/// inside tokens so UTF-8 words survive intact. Each token maps to
/// fnv1a64(token) mod vocab_size.
class Tokenizer {
 public:
  static constexpr std::string_view kScheme = "fnv1a64-mod";

  explicit Tokenizer(std::size_t vocab_size = kDefaultVocabSize);

  std::vector<TokenId> tokenize(std::string_view text) const;
  /// The lowercase token strings, before hashing.
  std::vector<std::string_view> split(std::string_view text, std::vector<char>& scratch) const;

  TokenId id_of(std::string_view token) const noexcept {
    return static_cast<TokenId>(fnv1a64(token) % vocab_size_);
  }
  std::size_t vocab_size() const noexcept { return vocab_size_; }

 private:
  std::size_t vocab_size_;
};

}  // namespace dembed::encoder
