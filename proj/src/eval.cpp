// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "dembed/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <unordered_map>

#include "dembed/encoder.hpp"
#include "dembed/error.hpp"
#include "dembed/parallel.hpp"
#include "dembed/rng.hpp"
#include "json.hpp"

namespace dembed::eval {

namespace {

using Json = nlohmann::ordered_json;

std::vector<double> similarities(const Item& query, std::span<const Item> candidates) {
  std::vector<double> sims(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    sims[c] = encoder::cosine_similarity(query.vec, candidates[c].vec);
  }
  return sims;
}

bool ranks_before(double s_a, const std::string& id_a, double s_b, const std::string& id_b) {
  if (s_a != s_b) return s_a > s_b;
  return id_a < id_b;
}

void require_candidates(std::span<const Item> queries, std::span<const Item> candidates) {
  if (queries.empty()) throw Error(Errc::empty_candidates, "no queries to rank");
  if (candidates.empty()) throw Error(Errc::empty_candidates, "no candidates to rank");
}

std::unordered_map<std::string, std::size_t> index_rows(const storage::EmbeddingTable& table) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    if (!index.emplace(table.ids[i], i).second) {
      throw Error(Errc::invalid_argument, "duplicate embedding id " + table.ids[i]);
    }
  }
  return index;
}

std::vector<double> row_of(const storage::EmbeddingTable& table,
                           const std::unordered_map<std::string, std::size_t>& index,
                           const std::string& id) {
  auto it = index.find(id);
  if (it == index.end()) throw Error(Errc::invalid_argument, "no embedding for id " + id);
  const auto row = table.row(it->second);
  return {row.begin(), row.end()};
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& r : rows) {
    widths.resize(std::max(widths.size(), r.size()));
    for (std::size_t c = 0; c < r.size(); ++c) widths[c] = std::max(widths[c], r[c].size());
  }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t c = 0; c < r.size(); ++c) {
      line += r[c];
      if (c + 1 < r.size()) line.append(widths[c] - r[c].size() + 2, ' ');
    }
    out += line + '\n';
  }
  return out;
}

}  // namespace

std::vector<Ranking> rank_candidates(std::span<const Item> queries,
                                     std::span<const Item> candidates, unsigned threads) {
  require_candidates(queries, candidates);
  std::vector<Ranking> out(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t q) {
    const auto sims = similarities(queries[q], candidates);
    Ranking& r = out[q];
    r.resize(candidates.size());
    std::iota(r.begin(), r.end(), std::size_t{0});
    std::sort(r.begin(), r.end(), [&](std::size_t a, std::size_t b) {
      return ranks_before(sims[a], candidates[a].id, sims[b], candidates[b].id);
    });
  });
  return out;
}

std::vector<std::size_t> gold_ranks(const RetrievalTask& task, const PoolOptions& options) {
  require_candidates(task.queries, task.candidates);
  std::unordered_map<std::string, std::size_t> cand_index;
  for (std::size_t c = 0; c < task.candidates.size(); ++c) {
    if (!cand_index.emplace(task.candidates[c].id, c).second) {
      throw Error(Errc::invalid_argument, "duplicate candidate id " + task.candidates[c].id);
    }
  }
  std::vector<std::size_t> gold(task.queries.size());
  for (std::size_t q = 0; q < task.queries.size(); ++q) {
    auto g = task.gold.find(task.queries[q].id);
    if (g == task.gold.end()) {
      throw Error(Errc::invalid_argument, "no gold candidate for query " + task.queries[q].id);
    }
    auto c = cand_index.find(g->second);
    if (c == cand_index.end()) {
      throw Error(Errc::invalid_argument, "gold candidate " + g->second + " is not a candidate");
    }
    gold[q] = c->second;
  }

  const std::size_t n = task.candidates.size();
  const bool full = options.pool_size == 0 || options.pool_size >= n;
  std::vector<std::size_t> ranks(task.queries.size());
  parallel_for(task.queries.size(), options.threads, [&](std::size_t q) {
    const Item& query = task.queries[q];
    const std::size_t g = gold[q];
    const double s_gold = encoder::cosine_similarity(query.vec, task.candidates[g].vec);
    const std::string& id_gold = task.candidates[g].id;
    std::size_t rank = 1;
    auto visit = [&](std::size_t c) {
      if (c == g) return;
      const double s = encoder::cosine_similarity(query.vec, task.candidates[c].vec);
      if (ranks_before(s, task.candidates[c].id, s_gold, id_gold)) ++rank;
    };
    if (full) {
      for (std::size_t c = 0; c < n; ++c) visit(c);
    } else {
      std::vector<std::size_t> others;
      others.reserve(n - 1);
      for (std::size_t c = 0; c < n; ++c) {
        if (c != g) others.push_back(c);
      }
      Rng rng(derive_seed(options.seed, q));
      for (std::size_t k = 0; k + 1 < options.pool_size; ++k) {
        std::swap(others[k], others[k + rng.uniform_index(others.size() - k)]);
        visit(others[k]);
      }
    }
    ranks[q] = rank;
  });
  return ranks;
}

double accuracy_at_k(std::span<const std::size_t> gold_ranks, std::size_t k) {
  if (k == 0) throw Error(Errc::invalid_argument, "K must be >= 1");
  if (gold_ranks.empty()) return 0.0;
  const auto hits = std::count_if(gold_ranks.begin(), gold_ranks.end(),
                                  [k](std::size_t r) { return r <= k; });
  return static_cast<double>(hits) / static_cast<double>(gold_ranks.size());
}

double mean_reciprocal_rank(std::span<const std::size_t> gold_ranks) {
  if (gold_ranks.empty()) return 0.0;
  double sum = 0.0;
  for (auto r : gold_ranks) sum += 1.0 / static_cast<double>(r);
  return sum / static_cast<double>(gold_ranks.size());
}

MeanSd mean_positive_similarity(const RetrievalTask& task) {
  if (task.queries.empty()) throw Error(Errc::empty_candidates, "no queries");
  std::unordered_map<std::string, const Item*> cands;
  for (const auto& c : task.candidates) cands.emplace(c.id, &c);
  std::vector<double> sims;
  sims.reserve(task.queries.size());
  for (const auto& q : task.queries) {
    auto g = task.gold.find(q.id);
    if (g == task.gold.end() || !cands.count(g->second)) {
      throw Error(Errc::invalid_argument, "no gold candidate for query " + q.id);
    }
    sims.push_back(encoder::cosine_similarity(q.vec, cands.at(g->second)->vec));
  }
  const double n = static_cast<double>(sims.size());
  const double mean = std::accumulate(sims.begin(), sims.end(), 0.0) / n;
  double ss = 0.0;
  for (double s : sims) ss += (s - mean) * (s - mean);
  return {mean, std::sqrt(ss / n)};
}

std::string_view gain_name(Gain gain) noexcept {
  return gain == Gain::linear ? "linear" : "exp";
}

Gain parse_gain(std::string_view name) {
  if (name == "linear") return Gain::linear;
  if (name == "exp") return Gain::exponential;
  throw Error(Errc::invalid_argument, "unknown gain '" + std::string(name) + "'");
}

GradedScore ndcg_at_k(std::span<const RankedQuery> rankings, const Qrels& qrels, std::size_t k,
                      Gain gain) {
  if (k == 0) throw Error(Errc::invalid_argument, "K must be >= 1");
  auto g = [gain](int grade) {
    return gain == Gain::linear ? static_cast<double>(grade) : std::exp2(grade) - 1.0;
  };
  GradedScore out;
  double sum = 0.0;
  for (const auto& rq : rankings) {
    auto it = qrels.find(rq.query_id);
    std::vector<int> grades;
    if (it != qrels.end()) {
      for (const auto& [cand, grade] : it->second) {
        if (grade > 0) grades.push_back(grade);
      }
    }
    if (grades.empty()) {
      ++out.skipped;
      continue;
    }
    std::sort(grades.begin(), grades.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) {
      idcg += g(grades[i]) / std::log2(static_cast<double>(i) + 2.0);
    }
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, rq.cand_ids.size()); ++i) {
      auto c = it->second.find(rq.cand_ids[i]);
      if (c != it->second.end() && c->second > 0) {
        dcg += g(c->second) / std::log2(static_cast<double>(i) + 2.0);
      }
    }
    sum += dcg / idcg;
    ++out.scored;
  }
  if (out.scored == 0) throw Error(Errc::no_relevant, "no query has a relevant candidate");
  out.value = sum / static_cast<double>(out.scored);
  return out;
}

GradedScore recall_at_k(std::span<const RankedQuery> rankings, const Qrels& qrels, std::size_t k) {
  if (k == 0) throw Error(Errc::invalid_argument, "K must be >= 1");
  GradedScore out;
  double sum = 0.0;
  for (const auto& rq : rankings) {
    auto it = qrels.find(rq.query_id);
    std::size_t relevant = 0;
    if (it != qrels.end()) {
      for (const auto& [cand, grade] : it->second) relevant += grade > 0;
    }
    if (relevant == 0) {
      ++out.skipped;
      continue;
    }
    std::size_t found = 0;
    for (std::size_t i = 0; i < std::min(k, rq.cand_ids.size()); ++i) {
      auto c = it->second.find(rq.cand_ids[i]);
      found += c != it->second.end() && c->second > 0;
    }
    sum += static_cast<double>(found) / static_cast<double>(relevant);
    ++out.scored;
  }
  if (out.scored == 0) throw Error(Errc::no_relevant, "no query has a relevant candidate");
  out.value = sum / static_cast<double>(out.scored);
  return out;
}

double spearman_rho(std::span<const double> predicted, std::span<const double> gold) {
  if (predicted.size() != gold.size()) {
    throw Error(Errc::length_mismatch, "predicted and gold differ in length");
  }
  if (predicted.size() < 3) throw Error(Errc::degenerate, "need at least 3 pairs");
  const auto rp = average_ranks(predicted);
  const auto rg = average_ranks(gold);
  const double n = static_cast<double>(rp.size());
  const double mp = std::accumulate(rp.begin(), rp.end(), 0.0) / n;
  const double mg = std::accumulate(rg.begin(), rg.end(), 0.0) / n;
  double cov = 0.0, vp = 0.0, vg = 0.0;
  for (std::size_t i = 0; i < rp.size(); ++i) {
    cov += (rp[i] - mp) * (rg[i] - mg);
    vp += (rp[i] - mp) * (rp[i] - mp);
    vg += (rg[i] - mg) * (rg[i] - mg);
  }
  if (vp == 0.0 || vg == 0.0) throw Error(Errc::degenerate, "all values equal on one side");
  return std::clamp(cov / std::sqrt(vp * vg), -1.0, 1.0);
}

MetricReport evaluate(const RetrievalTask& task, const EvalOptions& options) {
  MetricReport r;
  r.task = "retrieval";
  r.queries = task.queries.size();
  r.pool_size = options.pool.pool_size == 0
                    ? task.candidates.size()
                    : std::min(options.pool.pool_size, task.candidates.size());
  const auto ranks = gold_ranks(task, options.pool);
  for (auto k : options.ks) r.acc_at[k] = accuracy_at_k(ranks, k);
  r.mrr = mean_reciprocal_rank(ranks);
  r.mean_pos_sim = mean_positive_similarity(task);
  return r;
}

MetricReport evaluate(const GradedTask& task, const EvalOptions& options) {
  MetricReport r;
  r.task = "graded";
  r.queries = task.queries.size();
  r.pool_size = task.candidates.size();
  r.gain = std::string(gain_name(options.gain));
  const auto rankings = rank_candidates(task.queries, task.candidates, options.pool.threads);
  std::vector<RankedQuery> ranked(task.queries.size());
  std::size_t depth = 10;
  for (auto k : options.ks) depth = std::max(depth, k);
  for (std::size_t q = 0; q < ranked.size(); ++q) {
    ranked[q].query_id = task.queries[q].id;
    for (std::size_t i = 0; i < std::min(depth, rankings[q].size()); ++i) {
      ranked[q].cand_ids.push_back(task.candidates[rankings[q][i]].id);
    }
  }
  const auto ndcg = ndcg_at_k(ranked, task.qrels, 10, options.gain);
  r.ndcg_at_10 = ndcg.value;
  r.skipped_queries = ndcg.skipped;
  for (auto k : options.ks) r.recall_at[k] = recall_at_k(ranked, task.qrels, k).value;
  return r;
}

MetricReport evaluate(const StsTask& task, const EvalOptions&) {
  MetricReport r;
  r.task = "sts";
  r.queries = task.pairs.size();
  std::vector<double> predicted, gold;
  for (const auto& p : task.pairs) {
    predicted.push_back(encoder::cosine_similarity(p.a, p.b));
    gold.push_back(p.gold);
  }
  r.spearman = spearman_rho(predicted, gold);
  return r;
}

RetrievalTask retrieval_task(const storage::EmbeddingTable& table,
                             std::span<const std::pair<std::string, std::string>> pairs) {
  const auto index = index_rows(table);
  RetrievalTask task;
  std::set<std::string> seen;
  for (const auto& [q, c] : pairs) {
    if (!task.gold.emplace(q, c).second) {
      throw Error(Errc::invalid_argument, "query " + q + " appears twice");
    }
    task.queries.push_back({q, row_of(table, index, q)});
    if (seen.insert(c).second) task.candidates.push_back({c, row_of(table, index, c)});
  }
  return task;
}

GradedTask graded_task(const storage::EmbeddingTable& table, std::span<const storage::Qrel> qrels) {
  const auto index = index_rows(table);
  GradedTask task;
  for (const auto& q : qrels) {
    if (q.grade < 0) throw Error(Errc::invalid_argument, "negative relevance grade");
    if (!index.count(q.cand_id)) throw Error(Errc::invalid_argument, "no embedding for " + q.cand_id);
    if (!task.qrels.count(q.query_id)) task.queries.push_back({q.query_id, row_of(table, index, q.query_id)});
    task.qrels[q.query_id][q.cand_id] = q.grade;
  }
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    if (task.qrels.count(table.ids[i])) continue;
    const auto row = table.row(i);
    task.candidates.push_back({table.ids[i], {row.begin(), row.end()}});
  }
  return task;
}

StsTask sts_task(const storage::EmbeddingTable& table, std::span<const storage::StsRow> rows) {
  const auto index = index_rows(table);
  StsTask task;
  for (const auto& r : rows) {
    task.pairs.push_back({row_of(table, index, r.id_a), row_of(table, index, r.id_b), r.score});
  }
  return task;
}

std::string report_to_json(const MetricReport& r) {
  Json j;
  j["name"] = r.name;
  j["task"] = r.task;
  j["queries"] = r.queries;
  j["pool_size"] = r.pool_size;
  if (!r.acc_at.empty()) {
    Json acc = Json::object();
    for (const auto& [k, v] : r.acc_at) acc[std::to_string(k)] = v;
    j["acc_at"] = acc;
  }
  if (r.mrr) j["mrr"] = *r.mrr;
  if (r.mean_pos_sim) j["mean_pos_sim"] = {{"mean", r.mean_pos_sim->mean}, {"sd", r.mean_pos_sim->sd}};
  if (r.ndcg_at_10) j["ndcg_at_10"] = *r.ndcg_at_10;
  if (!r.recall_at.empty()) {
    Json rec = Json::object();
    for (const auto& [k, v] : r.recall_at) rec[std::to_string(k)] = v;
    j["recall_at"] = rec;
  }
  if (r.spearman) j["spearman"] = *r.spearman;
  if (r.gain) j["gain"] = *r.gain;
  j["skipped_queries"] = r.skipped_queries;
  return j.dump(2) + "\n";
}

MetricReport report_from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("malformed report: ") + e.what());
  }
  try {
    MetricReport r;
    r.name = j.at("name").get<std::string>();
    r.task = j.at("task").get<std::string>();
    r.queries = j.at("queries").get<std::size_t>();
    r.pool_size = j.at("pool_size").get<std::size_t>();
    if (j.contains("acc_at")) {
      for (const auto& [k, v] : j["acc_at"].items()) r.acc_at[std::stoul(k)] = v.get<double>();
    }
    if (j.contains("mrr")) r.mrr = j["mrr"].get<double>();
    if (j.contains("mean_pos_sim")) {
      r.mean_pos_sim = MeanSd{j["mean_pos_sim"].at("mean").get<double>(),
                              j["mean_pos_sim"].at("sd").get<double>()};
    }
    if (j.contains("ndcg_at_10")) r.ndcg_at_10 = j["ndcg_at_10"].get<double>();
    if (j.contains("recall_at")) {
      for (const auto& [k, v] : j["recall_at"].items()) r.recall_at[std::stoul(k)] = v.get<double>();
    }
    if (j.contains("spearman")) r.spearman = j["spearman"].get<double>();
    if (j.contains("gain")) r.gain = j["gain"].get<std::string>();
    r.skipped_queries = j.at("skipped_queries").get<std::size_t>();
    return r;
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("malformed report: ") + e.what());
  }
}

std::string report_tables(std::span<const MetricReport> reports) {
  std::vector<std::vector<std::string>> retrieval{{"Model", "Acc@1", "Acc@5", "MRR"}};
  std::vector<std::vector<std::string>> tasks{{"Task", "Metric", "Score"}};
  auto pct = [](const std::map<std::size_t, double>& acc, std::size_t k) {
    auto it = acc.find(k);
    return it == acc.end() ? std::string("-") : fixed(100.0 * it->second, 2) + "%";
  };
  for (const auto& r : reports) {
    if (r.task == "retrieval") {
      retrieval.push_back({r.name, pct(r.acc_at, 1), pct(r.acc_at, 5),
                           r.mrr ? fixed(*r.mrr, 4) : std::string("-")});
    } else if (r.task == "graded" && r.ndcg_at_10) {
      tasks.push_back({r.name, "NDCG@10", fixed(*r.ndcg_at_10, 4)});
    } else if (r.task == "sts" && r.spearman) {
      tasks.push_back({r.name, "Spearman", fixed(*r.spearman, 4)});
    }
  }
  if (tasks.size() == 1) return render(retrieval);
  if (retrieval.size() == 1) return render(tasks);
  return render(retrieval) + "\n" + render(tasks);
}

}  // namespace dembed::eval
