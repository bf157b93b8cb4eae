// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "dembed/tokenizer.hpp"

#include "dembed/error.hpp"

namespace dembed::encoder {

namespace {

bool is_token_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace

Tokenizer::Tokenizer(std::size_t vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size == 0) throw Error(Errc::invalid_argument, "vocab_size must be positive");
}

std::vector<std::string_view> Tokenizer::split(std::string_view text,
                                               std::vector<char>& scratch) const {
  scratch.assign(text.begin(), text.end());
  for (auto& c : scratch) c = ascii_lower(c);
  std::vector<std::string_view> out;
  std::size_t i = 0;
  const std::size_t n = scratch.size();
  while (i < n) {
    while (i < n && !is_token_byte(static_cast<unsigned char>(scratch[i]))) ++i;
    const std::size_t start = i;
    while (i < n && is_token_byte(static_cast<unsigned char>(scratch[i]))) ++i;
    if (i > start) out.emplace_back(scratch.data() + start, i - start);
  }
  return out;
}

std::vector<TokenId> Tokenizer::tokenize(std::string_view text) const {
  std::vector<char> scratch;
  const auto pieces = split(text, scratch);
  std::vector<TokenId> ids;
  ids.reserve(pieces.size());
  for (auto piece : pieces) ids.push_back(id_of(piece));
  return ids;
}

}  // namespace dembed::encoder
