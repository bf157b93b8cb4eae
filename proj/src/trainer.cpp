// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "dembed/trainer.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "dembed/error.hpp"
#include "dembed/parallel.hpp"
#include "dembed/rng.hpp"

namespace dembed::train {

using encoder::EncoderParams;
using encoder::ForwardTrace;

namespace {

bool is_trained(std::string_view name, bool lora_only) {
  return !lora_only || encoder::is_adapter_tensor(name);
}

struct BatchForward {
  std::vector<ForwardTrace> traces;  // anchors, then positives, then negatives
  EmbeddingGrad<double> loss;
};

BatchForward forward_batch(std::span<const TokenizedTriplet> batch, const EncoderParams& params,
                           const TrainConfig& config, const PassOptions& pass) {
  if (batch.empty()) throw Error(Errc::empty_batch, "empty batch");
  const std::size_t n = batch.size();
  BatchForward out;
  out.traces.resize(3 * n);
  parallel_for(3 * n, config.threads, [&](std::size_t k) {
    const auto& t = batch[k % n];
    const auto& tokens = k < n ? t.anchor : (k < 2 * n ? t.positive : t.negative);
    encoder::ForwardOptions fo{config.pooling, pass.train_mode, pass.dropout_seed, k};
    out.traces[k] = encoder::forward(tokens, params, fo);
  });
  std::vector<std::vector<double>> a(n), p(n), ng(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = out.traces[i].output;
    p[i] = out.traces[n + i].output;
    ng[i] = out.traces[2 * n + i].output;
  }
  out.loss = infonce_embeddings<double>(a, p, ng, config.temperature, config.in_batch_negatives);
  if (!std::isfinite(out.loss.loss)) throw Error(Errc::nonfinite_grad, "non-finite batch loss");
  return out;
}

}  // namespace

double infonce_loss(std::span<const std::vector<double>> anchors,
                    std::span<const std::vector<double>> positives,
                    std::span<const std::vector<double>> negatives, double tau,
                    bool in_batch_negatives) {
  const std::size_t n = anchors.size();
  if (positives.size() != n || negatives.size() != n) {
    throw Error(Errc::length_mismatch, "anchors, positives and negatives differ in length");
  }
  SimilarityBatch<double> batch;
  batch.n = n;
  batch.cross.assign(n * n, 0.0);
  batch.neg.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || in_batch_negatives) {
        batch.cross[i * n + j] = encoder::cosine_similarity(anchors[i], positives[j]);
      }
    }
    batch.neg[i] = encoder::cosine_similarity(anchors[i], negatives[i]);
  }
  return infonce_similarity(batch, tau, in_batch_negatives).loss;
}

void validate(const TrainConfig& c) {
  if (!(c.temperature > 0.0)) throw Error(Errc::bad_temperature, "temperature must be > 0");
  if (!(c.warmup_frac >= 0.0 && c.warmup_frac < 1.0)) {
    throw Error(Errc::bad_config, "warmup_frac must lie in [0, 1)");
  }
  if (c.batch_size < 2) throw Error(Errc::bad_config, "batch_size must be >= 2");
  if (!(c.peak_lr >= 0.0) || !(c.min_lr >= 0.0)) {
    throw Error(Errc::bad_config, "learning rates must be >= 0");
  }
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0)) {
    throw Error(Errc::bad_config, "betas must lie in [0, 1)");
  }
  if (!(c.eps > 0.0) || !(c.weight_decay >= 0.0)) {
    throw Error(Errc::bad_config, "eps must be > 0 and weight_decay >= 0");
  }
}

std::size_t warmup_steps(std::size_t total_steps, const TrainConfig& config) {
  if (total_steps == 0) throw Error(Errc::bad_schedule, "schedule needs at least one step");
  const auto w = static_cast<std::size_t>(
      std::ceil(config.warmup_frac * static_cast<double>(total_steps)));
  return std::min(w, total_steps - 1);
}

double lr_at_step(std::size_t step, std::size_t total_steps, const TrainConfig& config) {
  if (step > total_steps) throw Error(Errc::bad_schedule, "step beyond total_steps");
  const std::size_t w = warmup_steps(total_steps, config);
  if (step < w) {
    return config.peak_lr * static_cast<double>(step + 1) / static_cast<double>(w);
  }
  const double progress =
      static_cast<double>(step - w) / static_cast<double>(total_steps - w);
  return config.min_lr + 0.5 * (config.peak_lr - config.min_lr) *
                             (1.0 + std::cos(std::numbers::pi * progress));
}

OptimizerState make_optimizer_state(const EncoderParams& params, bool lora_only) {
  OptimizerState s;
  params.for_each_tensor([&](std::string_view name, const Tensor& t) {
    if (!is_trained(name, lora_only)) return;
    s.names.emplace_back(name);
    s.m.emplace_back(t.shape);
    s.v.emplace_back(t.shape);
  });
  return s;
}

void adamw_update(std::span<double> theta, std::span<const double> grad, std::span<double> m,
                  std::span<double> v, std::uint64_t t, double lr, const TrainConfig& c) {
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    theta[i] -= lr * (m_hat / (std::sqrt(v_hat) + c.eps) + c.weight_decay * theta[i]);
  }
}

void adamw_step(EncoderParams& params, const EncoderParams& grads, OptimizerState& state,
                double lr, const TrainConfig& config) {
  if (!(lr >= 0.0)) throw Error(Errc::bad_schedule, "learning rate must be >= 0");
  if (state.m.size() != state.names.size() || state.v.size() != state.names.size()) {
    throw Error(Errc::shape_mismatch, "optimizer state is inconsistent");
  }
  std::vector<Tensor*> thetas;
  std::vector<const Tensor*> gs;
  for (std::size_t k = 0; k < state.names.size(); ++k) {
    Tensor* theta = params.find(state.names[k]);
    const Tensor* g = grads.find(state.names[k]);
    if (!theta || !g || theta->shape != g->shape || theta->shape != state.m[k].shape ||
        theta->shape != state.v[k].shape) {
      throw Error(Errc::shape_mismatch, "shape mismatch for tensor " + state.names[k]);
    }
    for (double x : g->data) {
      if (!std::isfinite(x)) {
        throw Error(Errc::nonfinite_grad, "non-finite gradient in " + state.names[k]);
      }
    }
    thetas.push_back(theta);
    gs.push_back(g);
  }
  ++state.step;
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    adamw_update(thetas[k]->data, gs[k]->data, state.m[k].data, state.v[k].data, state.step, lr,
                 config);
  }
}

std::vector<TokenizedTriplet> tokenize_triplets(std::span<const triplets::Triplet> items,
                                                const encoder::Tokenizer& tokenizer) {
  std::vector<TokenizedTriplet> out;
  out.reserve(items.size());
  for (const auto& t : items) {
    TokenizedTriplet tt{tokenizer.tokenize(t.anchor_text), tokenizer.tokenize(t.positive_text),
                        tokenizer.tokenize(t.negative_text)};
    if (tt.anchor.empty() || tt.positive.empty() || tt.negative.empty()) {
      throw Error(Errc::empty_tokens, "triplet " + t.anchor_id + " has a text with no tokens");
    }
    out.push_back(std::move(tt));
  }
  return out;
}

BatchLossReport infonce_batch_loss(std::span<const TokenizedTriplet> batch,
                                   const EncoderParams& params, const TrainConfig& config,
                                   const PassOptions& pass) {
  const auto fb = forward_batch(batch, params, config, pass);
  return {fb.loss.loss, fb.loss.mean_pos_sim, fb.loss.mean_neg_sim, 0.0};
}

BatchLossReport infonce_gradient(std::span<const TokenizedTriplet> batch,
                                 const EncoderParams& params, const TrainConfig& config,
                                 const PassOptions& pass, EncoderParams& grads) {
  const auto fb = forward_batch(batch, params, config, pass);
  const std::size_t n = batch.size();
  grads = params.zeros_like();
  for (std::size_t k = 0; k < 3 * n; ++k) {
    const auto& d = k < n ? fb.loss.d_anchor[k]
                          : (k < 2 * n ? fb.loss.d_positive[k - n] : fb.loss.d_negative[k - 2 * n]);
    encoder::backward(fb.traces[k], d, params, grads, config.pooling, config.train_lora_only);
  }
  double ss = 0.0;
  grads.for_each_tensor([&](std::string_view name, const Tensor& t) {
    if (!is_trained(name, config.train_lora_only)) return;
    for (double g : t.data) ss += g * g;
  });
  BatchLossReport report{fb.loss.loss, fb.loss.mean_pos_sim, fb.loss.mean_neg_sim, std::sqrt(ss)};
  if (!std::isfinite(report.grad_norm)) {
    throw Error(Errc::nonfinite_grad, "non-finite gradient norm");
  }
  return report;
}

BatchLossReport infonce_gradient(std::span<const triplets::Triplet> batch,
                                 const EncoderParams& params, const TrainConfig& config,
                                 const encoder::Tokenizer& tokenizer, const PassOptions& pass,
                                 EncoderParams& grads) {
  const auto tokenized = tokenize_triplets(batch, tokenizer);
  return infonce_gradient(tokenized, params, config, pass, grads);
}

std::vector<std::pair<std::size_t, std::size_t>> batch_bounds(std::size_t n,
                                                              std::size_t batch_size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = 0; b < n; b += batch_size) out.emplace_back(b, std::min(n, b + batch_size));
  if (out.size() >= 2 && out.back().second - out.back().first == 1) {
    out[out.size() - 2].second = out.back().second;
    out.pop_back();
  }
  return out;
}

std::optional<double> evaluation_loss(std::span<const TokenizedTriplet> items,
                                      const EncoderParams& params, const TrainConfig& config) {
  if (items.empty()) return std::nullopt;
  CompensatedSum<double> total;
  for (auto [b, e] : batch_bounds(items.size(), config.batch_size)) {
    const auto r = infonce_batch_loss(items.subspan(b, e - b), params, config, {});
    total.add(r.loss * static_cast<double>(e - b));
  }
  return total.value() / static_cast<double>(items.size());
}

TrainResult train(std::span<const triplets::Triplet> train_items,
                  std::span<const triplets::Triplet> val_items, EncoderParams initial,
                  const TrainConfig& config, const encoder::Tokenizer& tokenizer,
                  const TrainCallbacks& callbacks) {
  validate(config);
  encoder::validate(initial);
  if (train_items.empty()) throw Error(Errc::no_train_data, "no training triplets");
  if (tokenizer.vocab_size() != initial.vocab_size()) {
    throw Error(Errc::shape_mismatch, "tokenizer vocabulary does not match the embedding table");
  }
  const auto train_tok = tokenize_triplets(train_items, tokenizer);
  const auto val_tok = tokenize_triplets(val_items, tokenizer);

  TrainResult result;
  result.params = std::move(initial);
  result.state = make_optimizer_state(result.params, config.train_lora_only);
  result.initial_val_loss = evaluation_loss(val_tok, result.params, config);

  const std::size_t steps_per_epoch = batch_bounds(train_tok.size(), config.batch_size).size();
  const std::size_t total_steps = steps_per_epoch * config.epochs;
  EncoderParams grads = result.params.zeros_like();
  std::vector<std::size_t> order(train_tok.size());
  std::vector<TokenizedTriplet> batch;
  std::uint64_t global_step = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, "shuffle/" + std::to_string(epoch)));
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.uniform_index(k)]);

    CompensatedSum<double> epoch_loss;
    EpochReport report;
    report.epoch = epoch;
    for (auto [b, e] : batch_bounds(order.size(), config.batch_size)) {
      batch.clear();
      for (std::size_t k = b; k < e; ++k) batch.push_back(train_tok[order[k]]);
      const double lr = lr_at_step(global_step, total_steps, config);
      const PassOptions pass{true, derive_seed(config.seed, "dropout/" + std::to_string(global_step))};
      const auto r = infonce_gradient(batch, result.params, config, pass, grads);
      adamw_step(result.params, grads, result.state, lr, config);
      epoch_loss.add(r.loss * static_cast<double>(e - b));
      if (callbacks.on_step) {
        callbacks.on_step({global_step, lr, r.loss, r.mean_pos_sim, r.mean_neg_sim, r.grad_norm});
      }
      ++global_step;
      ++report.steps;
    }
    report.train_loss = epoch_loss.value() / static_cast<double>(order.size());
    report.val_loss = evaluation_loss(val_tok, result.params, config);
    result.epochs.push_back(report);
    if (callbacks.on_epoch_end) callbacks.on_epoch_end(report, result.params);
  }
  return result;
}

GradCheckResult gradient_check(const EncoderParams& params,
                               std::span<const triplets::Triplet> batch_items,
                               const TrainConfig& config, const encoder::Tokenizer& tokenizer,
                               const GradCheckOptions& options) {
  if (!(options.h > 0.0)) throw Error(Errc::invalid_argument, "h must be > 0");
  const auto batch = tokenize_triplets(batch_items, tokenizer);
  const PassOptions pass{options.train_mode, derive_seed(options.seed, "gradcheck/dropout")};

  EncoderParams grads;
  infonce_gradient(batch, params, config, pass, grads);
  if (options.tamper) options.tamper(grads);

  std::vector<std::string> names;
  params.for_each_tensor([&](std::string_view name, const Tensor&) {
    if (is_trained(name, config.train_lora_only)) names.emplace_back(name);
  });
  std::set<encoder::TokenId> rows;
  for (const auto& t : batch) {
    for (const auto* tokens : {&t.anchor, &t.positive, &t.negative}) {
      if (config.pooling == encoder::Pooling::last_token) {
        rows.insert(tokens->back());
      } else {
        rows.insert(tokens->begin(), tokens->end());
      }
    }
  }
  const std::vector<encoder::TokenId> active(rows.begin(), rows.end());

  Rng rng(derive_seed(options.seed, "gradcheck/coords"));
  EncoderParams probe = params;
  GradCheckResult result;
  for (std::size_t s = 0; s < options.samples; ++s) {
    const auto& name = names[rng.uniform_index(names.size())];
    Tensor& t = *probe.find(name);
    std::size_t idx;
    if (name == "embedding") {
      const auto row = active[rng.uniform_index(active.size())];
      idx = row * t.cols() + rng.uniform_index(t.cols());
    } else {
      idx = rng.uniform_index(t.size());
    }
    const double saved = t.data[idx];
    t.data[idx] = saved + options.h;
    const double up = infonce_batch_loss(batch, probe, config, pass).loss;
    t.data[idx] = saved - options.h;
    const double down = infonce_batch_loss(batch, probe, config, pass).loss;
    t.data[idx] = saved;

    const double fd = (up - down) / (2.0 * options.h);
    const double analytic = grads.find(name)->data[idx];
    const double err = std::abs(analytic - fd) / std::max(std::abs(fd), 1e-8);
    if (err > result.max_rel_error || result.coordinates == 0) {
      result.max_rel_error = err;
      result.worst_tensor = name;
    }
    ++result.coordinates;
  }
  return result;
}

}  // namespace dembed::train
