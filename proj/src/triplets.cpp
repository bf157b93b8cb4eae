// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "dembed/triplets.hpp"

#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstring>
#include <optional>

#include "json.hpp"

#include "dembed/error.hpp"

namespace dembed::triplets {

using corpus::SentenceRecord;
using corpus::Split;
using json = nlohmann::json;

namespace {

constexpr std::array<std::string_view, 24> kStopwords = {
    "a",  "an", "and", "are", "as",   "at",   "be",   "by",   "for", "from", "in",   "is",
    "it", "of", "on",  "or",  "that", "the",  "this", "to",   "was", "were", "with", "which",
};

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (i < text.size()) {
    while (i < text.size() && space(text[i])) ++i;
    const std::size_t b = i;
    while (i < text.size() && !space(text[i])) ++i;
    if (i > b) words.emplace_back(text.substr(b, i - b));
  }
  return words;
}

bool is_stopword(std::string_view word) {
  std::string lower(word);
  for (auto& c : lower) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return std::find(kStopwords.begin(), kStopwords.end(), lower) != kStopwords.end();
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

std::string json_dump(const json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace

std::string encode_request(const ParaphraseRequest& request) {
  return json_dump(json{{"text", request.text}});
}

ParaphraseRequest decode_request(std::string_view line) {
  const auto j = json::parse(line, nullptr, false);
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
    throw Error(Errc::invalid_argument, "malformed paraphrase request");
  }
  return {j["text"].get<std::string>()};
}

std::string encode_response(const ParaphraseResponse& response) {
  return json_dump(json{{"paraphrase", response.paraphrase}});
}

ParaphraseResponse decode_response(std::string_view line) {
  const auto j = json::parse(line, nullptr, false);
  if (!j.is_object() || !j.contains("paraphrase") || !j["paraphrase"].is_string()) {
    throw Error(Errc::provider_unavailable, "malformed paraphrase response");
  }
  return {j["paraphrase"].get<std::string>()};
}

ParaphraseResponse FallbackParaphraser::paraphrase(const ParaphraseRequest& request) {
  auto words = split_words(request.text);
  if (words.empty()) return {""};
  const std::size_t k = (words.size() % 5 + 1) % words.size();
  std::rotate(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(k), words.end());
  std::vector<std::string> kept;
  for (const auto& w : words) {
    if (!is_stopword(w)) kept.push_back(w);
  }
  return {join(kept.size() >= 8 ? kept : words)};
}

std::span<const std::string_view> FallbackParaphraser::stopwords() noexcept {
  return kStopwords;
}

SubprocessProvider::SubprocessProvider(std::string command) : command_(std::move(command)) {
  start();
}

SubprocessProvider::~SubprocessProvider() { stop(); }

void SubprocessProvider::start() {
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, sv) != 0) {
    throw Error(Errc::provider_unavailable, std::string("socketpair: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(sv[0]);
    ::close(sv[1]);
    throw Error(Errc::provider_unavailable, std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::close(sv[0]);
    ::dup2(sv[1], STDIN_FILENO);
    ::dup2(sv[1], STDOUT_FILENO);
    if (sv[1] > STDERR_FILENO) ::close(sv[1]);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(sv[1]);
  pid_ = pid;
  to_child_ = sv[0];
  from_child_ = sv[0];
}

void SubprocessProvider::stop() noexcept {
  if (to_child_ >= 0) {
    ::shutdown(to_child_, SHUT_WR);
    ::close(to_child_);
  }
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
  pid_ = -1;
}

ParaphraseResponse SubprocessProvider::paraphrase(const ParaphraseRequest& request) {
  if (to_child_ < 0) throw Error(Errc::provider_unavailable, "provider process is not running");
  const std::string line = encode_request(request) + "\n";
  std::size_t sent = 0;
  while (sent < line.size()) {
    const auto n = ::send(to_child_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::provider_unavailable, "provider closed its input: " + command_);
    }
    sent += static_cast<std::size_t>(n);
  }
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string reply = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return decode_response(reply);
    }
    char chunk[4096];
    const auto n = ::recv(from_child_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error(Errc::provider_unavailable, "provider exited: " + command_);
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::unique_ptr<ParaphraseProvider> make_provider(const std::string& provider) {
  if (provider.empty() || provider == "fallback") return std::make_unique<FallbackParaphraser>();
  return std::make_unique<SubprocessProvider>(provider);
}

std::string generate_positive(const SentenceRecord& anchor, ParaphraseProvider& provider) {
  if (anchor.text.empty()) throw Error(Errc::invalid_argument, "anchor text is empty");
  auto response = provider.paraphrase({anchor.text});
  if (response.paraphrase.empty() || response.paraphrase == anchor.text) {
    throw Error(Errc::degenerate_paraphrase,
                "provider '" + provider.name() + "' returned an empty or identical paraphrase");
  }
  return std::move(response.paraphrase);
}

namespace {

// `other_sources` is the number of records whose source differs from the
// anchor's.
const SentenceRecord& sample_negative(std::size_t anchor_index,
                                      std::span<const SentenceRecord> records,
                                      const NegativePolicy& policy, Rng& rng,
                                      std::size_t other_sources) {
  const std::size_t n = records.size();
  if (anchor_index >= n) throw Error(Errc::invalid_argument, "anchor index out of range");
  if (policy.min_index_distance < 1) {
    throw Error(Errc::invalid_argument, "min_index_distance must be >= 1");
  }
  const auto& anchor_source = records[anchor_index].source_name;

  if (policy.require_different_source && other_sources > 0) {
    // Rejection sampling over the split is uniform over other-source records.
    while (true) {
      const auto& r = records[rng.uniform_index(n)];
      if (r.source_name != anchor_source) return r;
    }
  }

  // Eligible indices: [0, a - d] and [a + d, n - 1].
  const std::size_t d = policy.min_index_distance;
  const std::size_t low = anchor_index >= d ? anchor_index - d + 1 : 0;
  const std::size_t high_start = anchor_index + d;
  const std::size_t high = high_start < n ? n - high_start : 0;
  const std::size_t eligible = low + high;
  if (eligible == 0) {
    throw Error(Errc::no_eligible_negative,
                "no candidate at index distance >= " + std::to_string(d));
  }
  const std::size_t pick = rng.uniform_index(eligible);
  return records[pick < low ? pick : high_start + (pick - low)];
}

std::map<std::string_view, std::size_t> source_counts(std::span<const SentenceRecord> records) {
  std::map<std::string_view, std::size_t> counts;
  for (const auto& r : records) ++counts[r.source_name];
  return counts;
}

}  // namespace

const SentenceRecord& sample_hard_negative(std::size_t anchor_index,
                                           std::span<const SentenceRecord> records,
                                           const NegativePolicy& policy, Rng& rng) {
  if (anchor_index >= records.size()) {
    throw Error(Errc::invalid_argument, "anchor index out of range");
  }
  const auto counts = source_counts(records);
  const std::size_t other = records.size() - counts.at(records[anchor_index].source_name);
  return sample_negative(anchor_index, records, policy, rng, other);
}

const SentenceRecord& sample_hard_negative(std::size_t anchor_index,
                                           const corpus::CorpusManifest& manifest,
                                           const NegativePolicy& policy) {
  if (anchor_index >= manifest.records.size()) {
    throw Error(Errc::invalid_argument, "anchor index out of range");
  }
  const Split split = manifest.records[anchor_index].split;
  std::vector<SentenceRecord> pool;
  std::size_t local = 0;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    if (manifest.records[i].split != split) continue;
    if (i == anchor_index) local = pool.size();
    pool.push_back(manifest.records[i]);
  }
  Rng rng(derive_seed(policy.seed, static_cast<std::uint64_t>(anchor_index)));
  const auto& picked = sample_hard_negative(local, pool, policy, rng);
  for (const auto& r : manifest.records) {
    if (r.sent_id == picked.sent_id) return r;
  }
  throw Error(Errc::no_eligible_negative, "sampled record vanished");
}

TripletBuild build_triplets(const corpus::CorpusManifest& manifest, const NegativePolicy& policy,
                            ParaphraseProvider& provider) {
  constexpr std::array<Split, 3> kSplits = {Split::train, Split::val, Split::test};
  struct SplitPool {
    std::vector<SentenceRecord> records;
    std::vector<std::size_t> manifest_index;
  };
  std::map<Split, SplitPool> pools;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    if (r.split == Split::unassigned) {
      throw Error(Errc::invalid_argument, "manifest is not split (record " + r.sent_id + ")");
    }
    pools[r.split].records.push_back(r);
    pools[r.split].manifest_index.push_back(i);
  }

  // One sequential negative stream per split; anchors in manifest order.
  std::vector<std::optional<Triplet>> slots(manifest.records.size());
  TripletBuild out;
  for (Split split : kSplits) {
    auto it = pools.find(split);
    if (it == pools.end()) continue;
    const auto& pool = it->second;
    const auto counts = source_counts(pool.records);
    Rng rng(derive_seed(policy.seed, corpus::split_name(split)));
    for (std::size_t local = 0; local < pool.records.size(); ++local) {
      const auto& anchor = pool.records[local];
      const SentenceRecord* negative = nullptr;
      try {
        if (pool.records.size() < 2) {
          throw Error(Errc::no_eligible_negative, "split has fewer than two records");
        }
        negative = &sample_negative(local, pool.records, policy, rng,
                                    pool.records.size() - counts.at(anchor.source_name));
      } catch (const Error& e) {
        if (e.code() != Errc::no_eligible_negative) throw;
        ++out.skipped_no_negative;
        continue;
      }
      std::string positive;
      try {
        positive = generate_positive(anchor, provider);
      } catch (const Error& e) {
        if (e.code() != Errc::degenerate_paraphrase) throw;
        ++out.skipped_paraphrase;
        continue;
      }
      slots[pool.manifest_index[local]] =
          Triplet{anchor.sent_id, anchor.text,   std::move(positive),
                  negative->sent_id, negative->text, split};
    }
  }
  for (auto& slot : slots) {
    if (!slot) continue;
    ++out.per_split[std::string(corpus::split_name(slot->split))];
    out.triplets.push_back(std::move(*slot));
  }
  return out;
}

}  // namespace dembed::triplets
