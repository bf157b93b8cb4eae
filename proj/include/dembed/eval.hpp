// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force cosine retrieval and the metrics computed over it.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dembed/storage.hpp"

namespace dembed::eval {

struct Item {
  std::string id;
  std::vector<double> vec;
};

/// One gold candidate per query.
struct RetrievalTask {
  std::vector<Item> queries;
  std::vector<Item> candidates;
  std::map<std::string, std::string> gold;  // query_id -> cand_id
};

/// query_id -> (cand_id -> grade). Grades above zero count as relevant.
using Qrels = std::map<std::string, std::map<std::string, int>>;

struct GradedTask {
  std::vector<Item> queries;
  std::vector<Item> candidates;
  Qrels qrels;
};

struct StsPair {
  std::vector<double> a;
  std::vector<double> b;
  double gold = 0.0;
};

struct StsTask {
  std::vector<StsPair> pairs;
};

/// Candidate indices for one query, best first.
using Ranking = std::vector<std::size_t>;

/// Every candidate per query by descending cosine similarity, ties by
/// ascending cand_id. Throws Errc::empty_candidates.
std::vector<Ranking> rank_candidates(std::span<const Item> queries,
                                     std::span<const Item> candidates, unsigned threads = 1);

struct PoolOptions {
  /// 0 ranks against every candidate; otherwise each query sees its gold plus
  /// pool_size - 1 distinct other candidates drawn with `seed`.
  std::size_t pool_size = 0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// 1-based rank of each query's gold candidate under rank_candidates order.
std::vector<std::size_t> gold_ranks(const RetrievalTask& task, const PoolOptions& options = {});

double accuracy_at_k(std::span<const std::size_t> gold_ranks, std::size_t k);
double mean_reciprocal_rank(std::span<const std::size_t> gold_ranks);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;

  friend bool operator==(const MeanSd&, const MeanSd&) = default;
};

/// Mean and population SD of cosine(query, gold).
MeanSd mean_positive_similarity(const RetrievalTask& task);

enum class Gain { linear, exponential };
std::string_view gain_name(Gain gain) noexcept;
Gain parse_gain(std::string_view name);

struct RankedQuery {
  std::string query_id;
  std::vector<std::string> cand_ids;  // best first
};

/// Mean over queries with at least one relevant candidate; the rest are
/// counted in `skipped`. Throws Errc::no_relevant when every query is skipped.
struct GradedScore {
  double value = 0.0;
  std::size_t scored = 0;
  std::size_t skipped = 0;
};

GradedScore ndcg_at_k(std::span<const RankedQuery> rankings, const Qrels& qrels,
                      std::size_t k = 10, Gain gain = Gain::linear);
GradedScore recall_at_k(std::span<const RankedQuery> rankings, const Qrels& qrels, std::size_t k);

/// Pearson correlation of average ranks.
double spearman_rho(std::span<const double> predicted, std::span<const double> gold);

struct MetricReport {
  std::string name;
  std::string task;  // "retrieval", "graded" or "sts"
  std::size_t queries = 0;
  std::size_t pool_size = 0;
  std::map<std::size_t, double> acc_at;
  std::optional<double> mrr;
  std::optional<MeanSd> mean_pos_sim;
  std::optional<double> ndcg_at_10;
  std::map<std::size_t, double> recall_at;
  std::optional<double> spearman;
  std::optional<std::string> gain;
  std::size_t skipped_queries = 0;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

struct EvalOptions {
  std::vector<std::size_t> ks{1, 5, 10};
  Gain gain = Gain::linear;
  PoolOptions pool;
};

MetricReport evaluate(const RetrievalTask& task, const EvalOptions& options = {});
MetricReport evaluate(const GradedTask& task, const EvalOptions& options = {});
MetricReport evaluate(const StsTask& task, const EvalOptions& options = {});

// Task assembly from an embedding table; unknown ids throw
// Errc::invalid_argument.

/// Queries are the first column, candidates the distinct second-column ids.
RetrievalTask retrieval_task(const storage::EmbeddingTable& table,
                             std::span<const std::pair<std::string, std::string>> pairs);
/// Queries are the qrels query ids; every other table row is a candidate.
GradedTask graded_task(const storage::EmbeddingTable& table, std::span<const storage::Qrel> qrels);
StsTask sts_task(const storage::EmbeddingTable& table, std::span<const storage::StsRow> rows);

std::string report_to_json(const MetricReport& report);
MetricReport report_from_json(std::string_view text);

/// Model/Acc@1/Acc@5/MRR for retrieval reports, Task/Metric/Score for the
/// others. No reports yields the retrieval header alone.
std::string report_tables(std::span<const MetricReport> reports);

}  // namespace dembed::eval
