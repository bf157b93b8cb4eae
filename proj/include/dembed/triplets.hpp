// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

// Anchor / positive / hard-negative triplet construction.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dembed/corpus.hpp"
#include "dembed/rng.hpp"

namespace dembed::triplets {

struct Triplet {
  std::string anchor_id;
  std::string anchor_text;
  std::string positive_text;
  std::string negative_id;
  std::string negative_text;
  corpus::Split split = corpus::Split::train;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// A candidate is eligible when its index (within the anchor's split, in
/// manifest order) is at least min_index_distance away from the anchor. With
/// require_different_source, a candidate from another source is eligible at
/// any distance and same-source candidates are not; when the split holds a
/// single source the distance rule applies alone.
struct NegativePolicy {
  std::size_t min_index_distance = 500;
  bool require_different_source = false;
  std::uint64_t seed = 0;
};

struct ParaphraseRequest {
  std::string text;
};
struct ParaphraseResponse {
  std::string paraphrase;
};

// Wire format: one JSON object per line in each direction,
// {"text": ...} -> {"paraphrase": ...}.
std::string encode_request(const ParaphraseRequest& request);
ParaphraseRequest decode_request(std::string_view line);
std::string encode_response(const ParaphraseResponse& response);
/// Throws Errc::provider_unavailable on malformed JSON.
ParaphraseResponse decode_response(std::string_view line);

class ParaphraseProvider {
 public:
  virtual ~ParaphraseProvider() = default;
  virtual ParaphraseResponse paraphrase(const ParaphraseRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Deterministic built-in paraphraser: rotate words left by
/// k = (word_count mod 5) + 1, then drop stopwords if at least 8 words
/// remain afterwards. It preserves no meaning beyond the bag of words.
class FallbackParaphraser final : public ParaphraseProvider {
 public:
  ParaphraseResponse paraphrase(const ParaphraseRequest& request) override;
  std::string name() const override { return "fallback"; }
  static std::span<const std::string_view> stopwords() noexcept;
};

/// Talks the line protocol to a child process started with `/bin/sh -c
/// command`. Requests are sequential (one in flight).
class SubprocessProvider final : public ParaphraseProvider {
 public:
  explicit SubprocessProvider(std::string command);
  ~SubprocessProvider() override;
  SubprocessProvider(const SubprocessProvider&) = delete;
  SubprocessProvider& operator=(const SubprocessProvider&) = delete;

  ParaphraseResponse paraphrase(const ParaphraseRequest& request) override;
  std::string name() const override { return command_; }

 private:
  void start();
  void stop() noexcept;

  std::string command_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

/// "fallback" selects the built-in paraphraser; anything else is run as a
/// subprocess command.
std::unique_ptr<ParaphraseProvider> make_provider(const std::string& provider);

/// Throws Errc::degenerate_paraphrase if the provider returns an empty or
/// identical text.
std::string generate_positive(const corpus::SentenceRecord& anchor,
                              ParaphraseProvider& provider);

/// Draws uniformly among eligible candidates of `split_records`.
/// Throws Errc::no_eligible_negative when none qualify.
const corpus::SentenceRecord& sample_hard_negative(
    std::size_t anchor_index, std::span<const corpus::SentenceRecord> split_records,
    const NegativePolicy& policy, Rng& rng);

/// Convenience form over a whole manifest: anchor_index indexes
/// manifest.records; the candidate pool is the anchor's split and the draw is
/// seeded from (policy.seed, anchor_index).
const corpus::SentenceRecord& sample_hard_negative(std::size_t anchor_index,
                                                   const corpus::CorpusManifest& manifest,
                                                   const NegativePolicy& policy);

struct TripletBuild {
  std::vector<Triplet> triplets;
  std::size_t skipped_paraphrase = 0;
  std::size_t skipped_no_negative = 0;
  std::map<std::string, std::size_t> per_split;
};

/// One triplet per anchor in manifest order, for every assigned split.
TripletBuild build_triplets(const corpus::CorpusManifest& manifest, const NegativePolicy& policy,
                            ParaphraseProvider& provider);

}  // namespace dembed::triplets
