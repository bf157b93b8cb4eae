// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "doctest.h"
#include "dembed/error.hpp"
#include "dembed/infonce.hpp"
#include "dembed/rng.hpp"
#include "dembed/trainer.hpp"
#include "support/oracles.hpp"
#include "support/toy_corpus.hpp"

using namespace dembed;
using namespace dembed::train;

namespace {

using Vecs = std::vector<std::vector<double>>;

std::vector<double> unit_at_angle(double theta) { return {std::cos(theta), std::sin(theta)}; }

encoder::EncoderConfig small_config() {
  encoder::EncoderConfig c;
  c.vocab_size = 211;
  c.d_emb = 8;
  c.d_hid = 10;
  c.d_out = 6;
  c.lora_rank = 3;
  c.lora_alpha = 6.0;
  c.lora_dropout = 0.1;
  return c;
}

/// Every non-embedding tensor ~ N(0, 0.3^2) so activations are well away
/// from zero.
encoder::EncoderParams scaled_params(std::uint64_t seed) {
  Rng rng(seed);
  auto p = encoder::init_params(small_config(), rng.next());
  p.for_each_tensor([&](std::string_view name, Tensor& t) {
    if (name == "embedding") return;
    for (auto& v : t.data) v = rng.normal(0.0, 0.3);
  });
  return p;
}

std::vector<triplets::Triplet> word_batch(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<triplets::Triplet> out;
  auto sentence = [&] {
    std::string s;
    const auto len = 2 + rng.uniform_index(6);
    for (std::uint64_t i = 0; i < len; ++i) s += "w" + std::to_string(rng.uniform_index(40)) + " ";
    return s;
  };
  for (std::size_t i = 0; i < n; ++i) {
    triplets::Triplet t;
    t.anchor_id = "a" + std::to_string(i);
    t.anchor_text = sentence();
    t.positive_text = sentence();
    t.negative_id = "n" + std::to_string(i);
    t.negative_text = sentence();
    out.push_back(t);
  }
  return out;
}

TrainConfig small_train_config() {
  TrainConfig c;
  c.batch_size = 4;
  c.pooling = encoder::Pooling::mean;
  return c;
}

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

TEST_CASE("InfoNCE closed forms") {
  const Vecs a{{1.0, 0.0}}, same{{1.0, 0.0}};
  CHECK(std::abs(infonce_loss(a, same, same, 0.05) - std::log(2.0)) <= 1e-9);

  const Vecs a2{{1.0, 0.0}, {1.0, 0.0}};
  CHECK(std::abs(infonce_loss(a2, a2, a2, 0.05) - std::log(3.0)) <= 1e-9);

  // s(a, p) = 0.9, s(a, n) = 0.1 at tau = 0.05.
  const Vecs p{unit_at_angle(std::acos(0.9))}, n{unit_at_angle(std::acos(0.1))};
  const double expected = std::log1p(std::exp(-16.0));
  CHECK(std::abs(infonce_loss(a, p, n, 0.05) - expected) <= 1e-12 * expected);
  SimilarityBatch<double> sb{1, {0.9}, {0.1}};
  CHECK(std::abs(infonce_similarity(sb, 0.05).loss - expected) <= 1e-12 * expected);
}

TEST_CASE("InfoNCE input errors") {
  SimilarityBatch<double> empty;
  CHECK(code_of([&] { infonce_similarity(empty, 0.05); }) == Errc::empty_batch);
  SimilarityBatch<double> sb{1, {0.9}, {0.1}};
  CHECK(code_of([&] { infonce_similarity(sb, 0.0); }) == Errc::bad_temperature);
  CHECK(code_of([&] { infonce_similarity(sb, -1.0); }) == Errc::bad_temperature);
  const Vecs a{{1.0, 0.0}}, two{{1.0, 0.0}, {0.0, 1.0}};
  CHECK(code_of([&] { infonce_loss(a, two, a, 0.05); }) == Errc::length_mismatch);
}

TEST_CASE("InfoNCE is non-negative, order independent and matches a direct softmax") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(12), d = 2 + rng.uniform_index(6);
    Vecs a, p, ng;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(oracle::random_vector(rng, d));
      p.push_back(oracle::random_vector(rng, d));
      ng.push_back(oracle::random_vector(rng, d));
    }
    const double tau = 0.02 + rng.uniform01();
    const double loss = infonce_loss(a, p, ng, tau);
    CHECK(loss >= 0.0);

    long double direct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      long double denom = std::exp(static_cast<long double>(oracle::cosine(a[i], ng[i])) / tau);
      for (std::size_t j = 0; j < n; ++j) denom += std::exp(static_cast<long double>(oracle::cosine(a[i], p[j])) / tau);
      direct += -std::log(std::exp(static_cast<long double>(oracle::cosine(a[i], p[i])) / tau) / denom);
    }
    CHECK(std::abs(loss - static_cast<double>(direct / n)) <= 1e-9 * std::max(1.0, loss));

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t k = n; k > 1; --k) std::swap(perm[k - 1], perm[rng.uniform_index(k)]);
    Vecs pa, pp, pn;
    for (auto i : perm) {
      pa.push_back(a[i]);
      pp.push_back(p[i]);
      pn.push_back(ng[i]);
    }
    CHECK(std::abs(infonce_loss(pa, pp, pn, tau) - loss) <= 1e-9);
  }
}

TEST_CASE("InfoNCE falls with temperature when the positive is separated") {
  const Vecs a{unit_at_angle(0.0), unit_at_angle(2.0)};
  const Vecs p{unit_at_angle(0.1), unit_at_angle(2.1)};
  const Vecs n{unit_at_angle(1.2), unit_at_angle(3.3)};
  const double l50 = infonce_loss(a, p, n, 0.5);
  const double l10 = infonce_loss(a, p, n, 0.1);
  const double l05 = infonce_loss(a, p, n, 0.05);
  CHECK(l50 > l10);
  CHECK(l10 > l05);
}

TEST_CASE("similarity gradient matches central differences") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    SimilarityBatch<double> b;
    b.n = 1 + rng.uniform_index(5);
    for (std::size_t k = 0; k < b.n * b.n; ++k) b.cross.push_back(rng.uniform(-1.0, 1.0));
    for (std::size_t k = 0; k < b.n; ++k) b.neg.push_back(rng.uniform(-1.0, 1.0));
    const double tau = 0.1;
    const auto g = infonce_similarity(b, tau);
    const double h = 1e-6;
    for (std::size_t k = 0; k < b.cross.size(); ++k) {
      auto up = b, down = b;
      up.cross[k] += h;
      down.cross[k] -= h;
      const double fd = (infonce_similarity(up, tau).loss - infonce_similarity(down, tau).loss) / (2 * h);
      CHECK(g.d_cross[k] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("saturated logits stay finite in float and double") {
  SimilarityBatch<float> f{2, {1.0f, -1.0f, -1.0f, 1.0f}, {-1.0f, 1.0f}};
  const auto gf = infonce_similarity(f, 0.05f);
  CHECK(std::isfinite(gf.loss));
  for (float v : gf.d_cross) CHECK(std::isfinite(v));
  SimilarityBatch<double> d{2, {-1.0, 1.0, 1.0, -1.0}, {1.0, 1.0}};
  const auto gd = infonce_similarity(d, 0.05);
  CHECK(std::isfinite(gd.loss));
  CHECK(gd.loss == doctest::Approx(40.0 + std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("with B = 0 the gradient reaches B but not A") {
  auto p = encoder::init_params(small_config(), 3);
  const encoder::Tokenizer tok(p.vocab_size());
  const auto batch = word_batch(4, 1);
  auto cfg = small_train_config();
  cfg.train_lora_only = true;
  encoder::EncoderParams g;
  infonce_gradient(batch, p, cfg, tok, {}, g);
  for (double v : g.layer1.lora.A.data) CHECK(v == 0.0);
  for (double v : g.layer2.lora.A.data) CHECK(v == 0.0);
  const auto nonzero = [](const Tensor& t) {
    return std::any_of(t.data.begin(), t.data.end(), [](double v) { return v != 0.0; });
  };
  CHECK(nonzero(g.layer1.lora.B));
  CHECK(nonzero(g.layer2.lora.B));
  CHECK_FALSE(nonzero(g.layer1.W));
  CHECK_FALSE(nonzero(g.embedding));
}

TEST_CASE("duplicated triplets give finite loss and gradient") {
  auto batch = word_batch(3, 2);
  batch[1] = batch[0];
  const auto p = scaled_params(4);
  const encoder::Tokenizer tok(p.vocab_size());
  encoder::EncoderParams g;
  const auto r = infonce_gradient(batch, p, small_train_config(), tok, {}, g);
  CHECK(std::isfinite(r.loss));
  CHECK(std::isfinite(r.grad_norm));
}

TEST_CASE("empty batches are rejected") {
  const auto p = scaled_params(4);
  const encoder::Tokenizer tok(p.vocab_size());
  encoder::EncoderParams g;
  std::vector<triplets::Triplet> none;
  CHECK(code_of([&] { infonce_gradient(none, p, small_train_config(), tok, {}, g); }) == Errc::empty_batch);
}

TEST_CASE("gradient check passes in both modes and catches a corrupted gradient") {
  const encoder::Tokenizer tok(small_config().vocab_size);
  for (bool lora_only : {false, true}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      auto cfg = small_train_config();
      cfg.train_lora_only = lora_only;
      cfg.pooling = seed % 2 ? encoder::Pooling::mean : encoder::Pooling::last_token;
      GradCheckOptions opts;
      opts.seed = seed;
      const auto r = gradient_check(scaled_params(seed), word_batch(5, seed), cfg, tok, opts);
      CHECK(r.coordinates == 50);
      CHECK(r.max_rel_error <= 1e-4);
    }
  }
  GradCheckOptions opts;
  opts.tamper = [](encoder::EncoderParams& g) {
    for (auto& v : g.layer2.W.data) v *= 2.0;
  };
  opts.samples = 200;
  const auto bad = gradient_check(scaled_params(9), word_batch(5, 9), small_train_config(), tok, opts);
  CHECK(bad.max_rel_error > 0.1);
  CHECK(bad.worst_tensor == "layer2.weight");
}

TEST_CASE("finite-difference error is U-shaped in h") {
  const encoder::Tokenizer tok(small_config().vocab_size);
  const auto p = scaled_params(2);
  const auto batch = word_batch(4, 3);
  auto err = [&](double h) {
    GradCheckOptions opts;
    opts.h = h;
    opts.samples = 100;
    return gradient_check(p, batch, small_train_config(), tok, opts).max_rel_error;
  };
  const double coarse = err(1e-1), middle = err(1e-5), fine = err(1e-11);
  CHECK(middle < coarse);
  CHECK(middle < fine);
}

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  const std::size_t total = 100;
  const auto w = warmup_steps(total, c);
  CHECK(w == 10);
  CHECK(lr_at_step(w, total, c) == 2e-4);
  CHECK(lr_at_step(total, total, c) == 0.0);
  CHECK(lr_at_step(0, total, c) == doctest::Approx(2e-5));
  CHECK(std::abs(lr_at_step(w + (total - w) / 2, total, c) - 1e-4) <= 1e-12);
  c.min_lr = 1e-5;
  CHECK(lr_at_step(total, total, c) == 1e-5);
  CHECK(std::abs(lr_at_step(w + (total - w) / 2, total, c) - (2e-4 + 1e-5) / 2) <= 1e-12);

  for (std::size_t t : {1u, 2u, 3u, 7u, 10u, 11u, 250u}) {
    const auto wt = warmup_steps(t, c);
    CHECK(wt <= t - 1);
    if (wt >= 1) CHECK(std::abs(lr_at_step(wt, t, c) - lr_at_step(wt - 1, t, c)) <= c.peak_lr / wt + 1e-12);
    for (std::size_t s = 0; s <= t; ++s) CHECK(lr_at_step(s, t, c) <= c.peak_lr);
  }
  CHECK(code_of([&] { lr_at_step(0, 0, c); }) == Errc::bad_schedule);
  CHECK(code_of([&] { lr_at_step(11, 10, c); }) == Errc::bad_schedule);
}

TEST_CASE("AdamW single steps") {
  TrainConfig c;
  c.weight_decay = 0.0;
  std::vector<double> theta{0.0}, grad{1.0}, m{0.0}, v{0.0};
  adamw_update(theta, grad, m, v, 1, 1e-3, c);
  CHECK(std::abs(theta[0] - (-1e-3 / (1.0 + 1e-8))) <= 1e-18);
  CHECK(theta[0] == doctest::Approx(-9.99999995e-4).epsilon(1e-7));

  theta = {0.7};
  grad = {0.0};
  m = v = {0.0};
  adamw_update(theta, grad, m, v, 1, 1e-3, c);
  CHECK(theta[0] == 0.7);

  c.weight_decay = 0.01;
  theta = {0.7};
  m = v = {0.0};
  adamw_update(theta, grad, m, v, 1, 1e-3, c);
  CHECK(theta[0] == doctest::Approx(0.7 * (1.0 - 1e-3 * 0.01)).epsilon(1e-15));
}

TEST_CASE("adamw_step leaves everything untouched on a non-finite gradient") {
  auto p = scaled_params(1);
  TrainConfig c;
  auto state = make_optimizer_state(p, false);
  auto g = p.zeros_like();
  g.layer2.b.data[0] = std::nan("");
  const auto before = p;
  CHECK(code_of([&] { adamw_step(p, g, state, 1e-3, c); }) == Errc::nonfinite_grad);
  CHECK(p == before);
  CHECK(state.step == 0);

  auto lora_state = make_optimizer_state(p, true);
  CHECK(lora_state.names == std::vector<std::string>{"layer1.lora_A", "layer1.lora_B", "layer2.lora_A", "layer2.lora_B"});
  g = p.zeros_like();
  g.layer1.W.fill(1.0);
  g.layer1.lora.B.fill(1.0);
  adamw_step(p, g, lora_state, 1e-3, c);
  CHECK(p.layer1.W == before.layer1.W);
  CHECK_FALSE(p.layer1.lora.B == before.layer1.lora.B);
  CHECK(lora_state.step == 1);
}

TEST_CASE("config validation") {
  TrainConfig c;
  validate(c);
  c.temperature = 0.0;
  CHECK(code_of([&] { validate(c); }) == Errc::bad_temperature);
  c = {};
  c.batch_size = 1;
  CHECK(code_of([&] { validate(c); }) == Errc::bad_config);
  c = {};
  c.warmup_frac = 1.5;
  CHECK(code_of([&] { validate(c); }) == Errc::bad_config);
}

TEST_CASE("batch bounds fold a trailing singleton") {
  using B = std::vector<std::pair<std::size_t, std::size_t>>;
  CHECK(batch_bounds(10, 4) == B{{0, 4}, {4, 8}, {8, 10}});
  CHECK(batch_bounds(9, 4) == B{{0, 4}, {4, 9}});
  CHECK(batch_bounds(8, 4) == B{{0, 4}, {4, 8}});
  CHECK(batch_bounds(3, 8) == B{{0, 3}});
}

TEST_CASE("zero epochs leave the parameters unchanged") {
  const auto p = scaled_params(2);
  const encoder::Tokenizer tok(p.vocab_size());
  auto cfg = small_train_config();
  cfg.epochs = 0;
  const auto items = word_batch(8, 1);
  const auto r = train::train(items, {}, p, cfg, tok);
  CHECK(r.params == p);
  CHECK(r.epochs.empty());
}

TEST_CASE("training without data fails") {
  const auto p = scaled_params(2);
  const encoder::Tokenizer tok(p.vocab_size());
  CHECK(code_of([&] { train::train({}, {}, p, small_train_config(), tok); }) == Errc::no_train_data);
}

TEST_CASE("training is bit-deterministic and thread-count independent") {
  const auto p = scaled_params(3);
  const encoder::Tokenizer tok(p.vocab_size());
  auto cfg = small_train_config();
  cfg.peak_lr = 1e-2;
  const auto items = word_batch(13, 4);
  const auto a = train::train(items, {}, p, cfg, tok);
  cfg.threads = 3;
  const auto b = train::train(items, {}, p, cfg, tok);
  CHECK(a.params == b.params);
  CHECK(encoder::serialize_checkpoint(a.params) == encoder::serialize_checkpoint(b.params));
  CHECK_FALSE(a.params == p);
  cfg.seed = 1;
  CHECK_FALSE(train::train(items, {}, p, cfg, tok).params == a.params);
}

TEST_CASE("validation loss falls over two epochs on the two-cluster corpus") {
  const auto manifest = testing::two_cluster_manifest(400, 100, 1);
  const auto all = testing::two_cluster_triplets(manifest, 1);
  std::vector<triplets::Triplet> tr, val;
  for (const auto& t : all) (t.split == corpus::Split::train ? tr : val).push_back(t);
  const encoder::Tokenizer tok;
  TrainConfig cfg;
  cfg.batch_size = 32;
  cfg.pooling = encoder::Pooling::mean;
  std::vector<StepLog> steps;
  TrainCallbacks cb;
  cb.on_step = [&](const StepLog& s) { steps.push_back(s); };
  const auto r = train::train(tr, val, encoder::init_params({}, 5), cfg, tok, cb);
  REQUIRE(r.epochs.size() == 2);
  REQUIRE(r.initial_val_loss);
  CHECK(*r.epochs[0].val_loss < *r.initial_val_loss);
  CHECK(*r.epochs[1].val_loss < *r.epochs[0].val_loss);
  CHECK(steps.size() == r.epochs[0].steps + r.epochs[1].steps);
  CHECK(steps.front().step == 0);
  CHECK(steps.back().step + 1 == steps.size());
  CHECK(r.state.step == steps.size());
}
