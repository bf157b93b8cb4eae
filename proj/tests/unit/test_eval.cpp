// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "dembed/error.hpp"
#include "dembed/eval.hpp"
#include "dembed/rng.hpp"
#include "support/oracles.hpp"

using namespace dembed;
using namespace dembed::eval;

namespace {

std::string id(char prefix, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%03zu", prefix, i);
  return buf;
}

RetrievalTask random_task(Rng& rng, std::size_t nq, std::size_t nc, std::size_t d) {
  RetrievalTask t;
  for (std::size_t c = 0; c < nc; ++c) t.candidates.push_back({id('c', c), oracle::random_vector(rng, d)});
  for (std::size_t q = 0; q < nq; ++q) {
    t.queries.push_back({id('q', q), oracle::random_vector(rng, d)});
    t.gold[id('q', q)] = id('c', rng.uniform_index(nc));
  }
  return t;
}

std::vector<std::string> ids_of(const Ranking& r, const std::vector<Item>& cands) {
  std::vector<std::string> out;
  for (auto i : r) out.push_back(cands[i].id);
  return out;
}

std::size_t line_count(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no dembed::Error thrown");
  return Errc::io;
}

}  // namespace

TEST_CASE("ranking basics") {
  const std::vector<Item> cands{{"b", {1.0, 0.0}}, {"a", {1.0, 0.0}}, {"c", {0.0, 1.0}}};
  const std::vector<Item> queries{{"q", {0.0, 2.0}}, {"r", {1.0, 0.0}}};
  const auto r = rank_candidates(queries, cands);
  CHECK(ids_of(r[0], cands).front() == "c");
  CHECK(ids_of(r[1], cands) == std::vector<std::string>{"a", "b", "c"});
  CHECK(code_of([&] { rank_candidates(queries, {}); }) == Errc::empty_candidates);
}

TEST_CASE("ranking matches a full-sort oracle and ignores positive rescaling") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    auto t = random_task(rng, 20, 50, 6);
    const auto r = rank_candidates(t.queries, t.candidates, 3);
    const auto expected = oracle::full_sort(t.queries, t.candidates);
    for (std::size_t q = 0; q < t.queries.size(); ++q) CHECK(ids_of(r[q], t.candidates) == expected[q]);

    for (auto* items : {&t.queries, &t.candidates}) {
      for (auto& it : *items) {
        for (auto& v : it.vec) v *= 3.7;
      }
    }
    CHECK(rank_candidates(t.queries, t.candidates) == r);
  }
}

TEST_CASE("accuracy and MRR examples") {
  const std::vector<std::size_t> ranks{1, 3, 12};
  CHECK(accuracy_at_k(ranks, 1) == doctest::Approx(1.0 / 3));
  CHECK(accuracy_at_k(ranks, 5) == doctest::Approx(2.0 / 3));
  CHECK(accuracy_at_k(ranks, 10) == doctest::Approx(2.0 / 3));
  CHECK(accuracy_at_k(ranks, 12) == 1.0);
  const std::vector<std::size_t> ones{1, 1, 1};
  for (std::size_t k : {1u, 5u, 10u}) CHECK(accuracy_at_k(ones, k) == 1.0);
  CHECK(mean_reciprocal_rank(ones) == 1.0);
  const std::vector<std::size_t> mixed{1, 2, 4};
  CHECK(mean_reciprocal_rank(mixed) == doctest::Approx(0.5833333333333));
}

TEST_CASE("gold ranks agree with the oracle and bound the metrics") {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto t = random_task(rng, 1 + rng.uniform_index(40), 1 + rng.uniform_index(80), 4);
    const auto ranks = gold_ranks(t);
    const auto sorted = oracle::full_sort(t.queries, t.candidates);
    for (std::size_t q = 0; q < ranks.size(); ++q) {
      CHECK(ranks[q] == oracle::position_of(sorted[q], t.gold.at(t.queries[q].id)));
    }
    double prev = 0.0;
    for (std::size_t k = 1; k <= t.candidates.size(); ++k) {
      const double acc = accuracy_at_k(ranks, k);
      CHECK(acc >= prev);
      prev = acc;
    }
    CHECK(prev == 1.0);
    const double mrr = mean_reciprocal_rank(ranks);
    CHECK(accuracy_at_k(ranks, 1) <= mrr);
    CHECK(mrr <= 1.0);
    CHECK(std::abs(mrr - oracle::mrr(ranks)) <= 1e-12);
  }
}

TEST_CASE("MRR over 500 random queries matches a naive recomputation") {
  Rng rng(3);
  const auto t = random_task(rng, 500, 60, 5);
  const auto sorted = oracle::full_sort(t.queries, t.candidates);
  double naive = 0.0;
  for (std::size_t q = 0; q < 500; ++q) naive += 1.0 / oracle::position_of(sorted[q], t.gold.at(t.queries[q].id));
  CHECK(std::abs(mean_reciprocal_rank(gold_ranks(t)) - naive / 500) <= 1e-9);
}

TEST_CASE("sampled pools contain the gold and are reproducible") {
  Rng rng(4);
  const auto t = random_task(rng, 30, 100, 4);
  PoolOptions pool;
  pool.pool_size = 10;
  pool.seed = 5;
  const auto a = gold_ranks(t, pool);
  CHECK(a == gold_ranks(t, pool));
  for (auto r : a) CHECK((r >= 1 && r <= 10));
  const auto full = gold_ranks(t);
  for (std::size_t q = 0; q < a.size(); ++q) CHECK(a[q] <= full[q]);
  pool.pool_size = 1;
  for (auto r : gold_ranks(t, pool)) CHECK(r == 1);
}

TEST_CASE("mean positive similarity") {
  RetrievalTask t;
  t.queries = {{"q1", {1.0, 0.0}}, {"q2", {0.0, 1.0}}};
  t.candidates = {{"c1", {1.0, 0.0}}, {"c2", {0.0, 1.0}}};
  t.gold = {{"q1", "c1"}, {"q2", "c2"}};
  auto ms = mean_positive_similarity(t);
  CHECK(ms.mean == doctest::Approx(1.0));
  CHECK(ms.sd == doctest::Approx(0.0));

  t.candidates[0].vec = {0.8, 0.6};
  ms = mean_positive_similarity(t);
  CHECK(ms.mean == doctest::Approx(0.9));
  CHECK(ms.sd == doctest::Approx(0.1));

  Rng rng(6);
  const auto r = random_task(rng, 40, 20, 5);
  std::vector<double> sims;
  std::map<std::string, const Item*> by_id;
  for (const auto& c : r.candidates) by_id[c.id] = &c;
  for (const auto& q : r.queries) sims.push_back(oracle::cosine(q.vec, by_id[r.gold.at(q.id)]->vec));
  const double mean = std::accumulate(sims.begin(), sims.end(), 0.0) / sims.size();
  double ss = 0.0;
  for (double s : sims) ss += (s - mean) * (s - mean);
  const auto got = mean_positive_similarity(r);
  CHECK(std::abs(got.mean - mean) <= 1e-9);
  CHECK(std::abs(got.sd - std::sqrt(ss / sims.size())) <= 1e-9);
}

TEST_CASE("NDCG examples") {
  const std::vector<RankedQuery> r{{"q", {"x", "y", "rel", "z"}}};
  Qrels qrels{{"q", {{"rel", 1}}}};
  CHECK(ndcg_at_k(r, qrels).value == doctest::Approx(0.5));
  const std::vector<RankedQuery> top{{"q", {"rel", "x"}}};
  CHECK(ndcg_at_k(top, qrels).value == 1.0);
}

TEST_CASE("NDCG peaks at the ideal order over every permutation") {
  const Qrels qrels{{"q", {{"a", 3}, {"b", 2}, {"c", 1}}}};
  std::vector<std::string> order{"a", "b", "c"};
  double best = -1.0;
  std::vector<std::string> argmax;
  for (Gain gain : {Gain::linear, Gain::exponential}) {
    std::sort(order.begin(), order.end());
    do {
      const std::vector<RankedQuery> r{{"q", order}};
      const double v = ndcg_at_k(r, qrels, 10, gain).value;
      CHECK(v <= 1.0);
      CHECK(v == doctest::Approx(oracle::ndcg({order}, {"q"}, qrels, 10, gain == Gain::exponential)));
      if (v > best) {
        best = v;
        argmax = order;
      }
    } while (std::next_permutation(order.begin(), order.end()));
    CHECK(best == 1.0);
    CHECK(argmax == std::vector<std::string>{"a", "b", "c"});
    best = -1.0;
  }
}

TEST_CASE("graded metrics skip queries without relevant candidates") {
  const std::vector<RankedQuery> r{{"q1", {"a", "b"}}, {"q2", {"a", "b"}}, {"q3", {"b", "a"}}};
  const Qrels qrels{{"q1", {{"b", 1}}}, {"q2", {{"a", 0}}}};
  const auto n = ndcg_at_k(r, qrels);
  CHECK(n.scored == 1);
  CHECK(n.skipped == 2);
  CHECK(n.value == doctest::Approx(1.0 / std::log2(3.0)));
  const Qrels none{{"q1", {{"a", 0}}}};
  CHECK(code_of([&] { ndcg_at_k(r, none); }) == Errc::no_relevant);
  CHECK(code_of([&] { recall_at_k(r, none, 10); }) == Errc::no_relevant);
}

TEST_CASE("recall examples") {
  std::vector<std::string> ranked;
  for (int i = 0; i < 20; ++i) ranked.push_back("c" + std::to_string(i));
  const std::vector<RankedQuery> r{{"q", ranked}};
  CHECK(recall_at_k(r, {{"q", {{"c3", 1}, {"c15", 2}}}}, 10).value == 0.5);
  CHECK(recall_at_k(r, {{"q", {{"c3", 1}, {"c9", 2}}}}, 10).value == 1.0);
}

TEST_CASE("graded metrics match oracles on random instances") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t nq = 1 + rng.uniform_index(20), nc = 5 + rng.uniform_index(60);
    std::vector<RankedQuery> r;
    std::vector<std::vector<std::string>> ranked;
    std::vector<std::string> qids;
    Qrels qrels;
    for (std::size_t q = 0; q < nq; ++q) {
      std::vector<std::string> c;
      for (std::size_t i = 0; i < nc; ++i) c.push_back(id('c', i));
      for (std::size_t k = nc; k > 1; --k) std::swap(c[k - 1], c[rng.uniform_index(k)]);
      r.push_back({id('q', q), c});
      ranked.push_back(c);
      qids.push_back(id('q', q));
      for (std::size_t i = 0; i < nc; ++i) {
        if (rng.uniform_index(6) == 0) qrels[id('q', q)][id('c', i)] = static_cast<int>(rng.uniform_index(4));
      }
    }
    bool any = false;
    for (auto& [q, m] : qrels) {
      for (auto& [c, g] : m) any |= g > 0;
    }
    if (!any) continue;
    for (Gain gain : {Gain::linear, Gain::exponential}) {
      CHECK(std::abs(ndcg_at_k(r, qrels, 10, gain).value -
                     oracle::ndcg(ranked, qids, qrels, 10, gain == Gain::exponential)) <= 1e-9);
    }
    for (std::size_t k : {1u, 5u, 10u, 100u}) {
      CHECK(std::abs(recall_at_k(r, qrels, k).value - oracle::recall(ranked, qids, qrels, k)) <= 1e-9);
    }
  }
}

TEST_CASE("Spearman examples") {
  const std::vector<double> gold{1, 2, 3}, up{0.1, 0.2, 0.3}, down{0.3, 0.2, 0.1};
  CHECK(spearman_rho(up, gold) == doctest::Approx(1.0));
  CHECK(spearman_rho(down, gold) == doctest::Approx(-1.0));
  const std::vector<double> tied_gold{1, 1, 2}, tied_pred{0.5, 0.5, 0.9};
  CHECK(spearman_rho(tied_pred, tied_gold) == doctest::Approx(1.0));
  const std::vector<double> two{1, 2}, flat{1, 1, 1};
  CHECK(code_of([&] { spearman_rho(two, two); }) == Errc::degenerate);
  CHECK(code_of([&] { spearman_rho(flat, gold); }) == Errc::degenerate);
  CHECK(code_of([&] { spearman_rho(two, gold); }) == Errc::length_mismatch);
}

TEST_CASE("Spearman matches the oracle and ignores monotone transforms") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(40);
    std::vector<double> a(n), b(n);
    for (auto& x : a) x = static_cast<double>(rng.uniform_index(8));
    for (auto& x : b) x = rng.uniform(-1.0, 1.0);
    if (std::all_of(a.begin(), a.end(), [&](double x) { return x == a[0]; })) continue;
    const double rho = spearman_rho(b, a);
    CHECK(std::abs(rho - oracle::spearman(b, a)) <= 1e-9);
    std::vector<double> t(n);
    std::transform(b.begin(), b.end(), t.begin(), [](double x) { return std::exp(3.0 * x) - 7.0; });
    CHECK(std::abs(spearman_rho(t, a) - rho) <= 1e-12);
  }
}

TEST_CASE("evaluate on a perfect task") {
  RetrievalTask t;
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<double> v(4, 0.0);
    v[i] = 1.0;
    t.queries.push_back({id('q', i), v});
    t.candidates.push_back({id('c', i), v});
    t.gold[id('q', i)] = id('c', i);
  }
  const auto r = evaluate(t);
  CHECK(r.acc_at.at(1) == 1.0);
  CHECK(*r.mrr == 1.0);
  CHECK(r.mean_pos_sim->mean == 1.0);
  CHECK(r.pool_size == 4);
  CHECK(code_of([] { evaluate(RetrievalTask{}); }) == Errc::empty_candidates);
}

TEST_CASE("evaluate fills graded and sts reports") {
  GradedTask g;
  g.queries = {{"q1", {1.0, 0.0}}, {"q2", {0.0, 1.0}}};
  g.candidates = {{"a", {1.0, 0.1}}, {"b", {0.1, 1.0}}, {"c", {-1.0, 0.0}}};
  g.qrels = {{"q1", {{"a", 2}}}, {"q2", {{"b", 1}, {"c", 1}}}};
  EvalOptions opts;
  opts.gain = Gain::exponential;
  const auto r = evaluate(g, opts);
  CHECK(r.task == "graded");
  CHECK(*r.gain == "exp");
  CHECK(*r.ndcg_at_10 >= 0.0);
  CHECK(*r.ndcg_at_10 <= 1.0);
  CHECK(r.recall_at.at(1) == doctest::Approx(0.75));

  StsTask s;
  s.pairs = {{{1, 0}, {1, 0.1}, 5.0}, {{1, 0}, {0, 1}, 1.0}, {{1, 0}, {1, 1}, 3.0}};
  CHECK(*evaluate(s).spearman == doctest::Approx(1.0));
}

TEST_CASE("tasks assemble from an embedding table") {
  storage::EmbeddingTable table;
  table.ids = {"q1", "q2", "c1", "c2"};
  table.dim = 2;
  table.values = {1, 0, 0, 1, 1, 0.1f, 0.1f, 1};
  const std::vector<std::pair<std::string, std::string>> pairs{{"q1", "c1"}, {"q2", "c2"}};
  const auto t = retrieval_task(table, pairs);
  CHECK(t.queries.size() == 2);
  CHECK(t.candidates.size() == 2);
  CHECK(evaluate(t).acc_at.at(1) == 1.0);

  const std::vector<storage::Qrel> qrels{{"q1", "c1", 1}};
  const auto g = graded_task(table, qrels);
  CHECK(g.queries.size() == 1);
  CHECK(g.candidates.size() == 3);

  const std::vector<std::pair<std::string, std::string>> bad{{"q1", "missing"}};
  CHECK(code_of([&] { retrieval_task(table, bad); }) == Errc::invalid_argument);
}

TEST_CASE("reports round-trip through JSON") {
  MetricReport r;
  r.name = "m";
  r.task = "retrieval";
  r.queries = 3;
  r.pool_size = 7;
  r.acc_at = {{1, 0.5}, {5, 0.75}};
  r.mrr = 0.625;
  r.mean_pos_sim = MeanSd{0.8, 0.1};
  CHECK(report_from_json(report_to_json(r)) == r);
  MetricReport g;
  g.task = "graded";
  g.ndcg_at_10 = 0.3;
  g.recall_at = {{10, 0.4}};
  g.gain = "linear";
  g.skipped_queries = 2;
  CHECK(report_from_json(report_to_json(g)) == g);
}

TEST_CASE("report tables") {
  CHECK(line_count(report_tables({})) == 1);
  CHECK(report_tables({}).rfind("Model", 0) == 0);

  MetricReport one;
  one.name = "tuned";
  one.task = "retrieval";
  one.acc_at = {{1, 0.8125}, {5, 1.0}};
  one.mrr = 0.90751;
  const std::vector<MetricReport> single{one};
  const auto t1 = report_tables(single);
  CHECK(line_count(t1) == 2);
  std::istringstream in(t1);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  std::istringstream hs(header), rs(row);
  std::vector<std::string> cols, cells;
  for (std::string w; hs >> w;) cols.push_back(w);
  for (std::string w; rs >> w;) cells.push_back(w);
  CHECK(cols == std::vector<std::string>{"Model", "Acc@1", "Acc@5", "MRR"});
  CHECK(cells == std::vector<std::string>{"tuned", "81.25%", "100.00%", "0.9075"});

  MetricReport a, b;
  a.name = "sts-dev";
  a.task = "sts";
  a.spearman = 0.5;
  b.name = "claims";
  b.task = "graded";
  b.ndcg_at_10 = 0.25;
  const std::vector<MetricReport> multi{a, b};
  const auto t2 = report_tables(multi);
  CHECK(line_count(t2) == 3);
  CHECK(t2.rfind("Task", 0) == 0);
  CHECK(t2.find("Spearman") != std::string::npos);
  CHECK(t2.find("NDCG@10") != std::string::npos);
}

TEST_CASE("gain names") {
  CHECK(parse_gain("linear") == Gain::linear);
  CHECK(parse_gain("exp") == Gain::exponential);
  CHECK_THROWS_AS(parse_gain("log"), Error);
}
