// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dembed/encoder.hpp"
#include "dembed/infonce.hpp"
#include "dembed/tensor.hpp"
#include "dembed/triplets.hpp"

namespace dembed::train {

struct TrainConfig {
  std::size_t epochs = 2;
  std::size_t batch_size = 128;
  double peak_lr = 2e-4;
  double warmup_frac = 0.1;
  double min_lr = 0.0;
  double temperature = 0.05;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  bool train_lora_only = false;
  encoder::Pooling pooling = encoder::Pooling::last_token;
  bool in_batch_negatives = true;
  unsigned threads = 1;
};

/// Throws Errc::bad_temperature / Errc::bad_config on invalid settings.
void validate(const TrainConfig& config);

/// Linear warmup over W = ceil(warmup_frac * total) steps (capped at
/// total - 1), then cosine annealing from peak_lr down to min_lr at
/// step == total.
double lr_at_step(std::size_t step, std::size_t total_steps, const TrainConfig& config);
std::size_t warmup_steps(std::size_t total_steps, const TrainConfig& config);

struct OptimizerState {
  std::vector<std::string> names;  // trained tensors, canonical order
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;
};

OptimizerState make_optimizer_state(const encoder::EncoderParams& params, bool lora_only);

/// Decoupled-weight-decay Adam on one tensor; `t` is the 1-based step.
void adamw_update(std::span<double> theta, std::span<const double> grad, std::span<double> m,
                  std::span<double> v, std::uint64_t t, double lr, const TrainConfig& config);

/// Advances state.step and updates every tensor named in state.names.
/// Throws Errc::shape_mismatch or Errc::nonfinite_grad; on throw nothing is
/// modified.
void adamw_step(encoder::EncoderParams& params, const encoder::EncoderParams& grads,
                OptimizerState& state, double lr, const TrainConfig& config);

struct BatchLossReport {
  double loss = 0.0;
  double mean_pos_sim = 0.0;
  double mean_neg_sim = 0.0;
  double grad_norm = 0.0;
};

struct TokenizedTriplet {
  std::vector<encoder::TokenId> anchor;
  std::vector<encoder::TokenId> positive;
  std::vector<encoder::TokenId> negative;
};

std::vector<TokenizedTriplet> tokenize_triplets(std::span<const triplets::Triplet> items,
                                                const encoder::Tokenizer& tokenizer);

struct PassOptions {
  bool train_mode = false;
  std::uint64_t dropout_seed = 0;
};

/// Loss only (no gradient).
BatchLossReport infonce_batch_loss(std::span<const TokenizedTriplet> batch,
                                   const encoder::EncoderParams& params,
                                   const TrainConfig& config, const PassOptions& pass);

/// Exact gradient of the batch loss with respect to every trained tensor
/// (adapters only when config.train_lora_only). `grads` is overwritten and
/// has the shapes of `params`; untrained tensors stay zero.
BatchLossReport infonce_gradient(std::span<const TokenizedTriplet> batch,
                                 const encoder::EncoderParams& params, const TrainConfig& config,
                                 const PassOptions& pass, encoder::EncoderParams& grads);

BatchLossReport infonce_gradient(std::span<const triplets::Triplet> batch,
                                 const encoder::EncoderParams& params, const TrainConfig& config,
                                 const encoder::Tokenizer& tokenizer, const PassOptions& pass,
                                 encoder::EncoderParams& grads);

struct StepLog {
  std::uint64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double mean_pos_sim = 0.0;
  double mean_neg_sim = 0.0;
  double grad_norm = 0.0;
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  std::size_t steps = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
};

struct TrainCallbacks {
  std::function<void(const StepLog&)> on_step;
  std::function<void(const EpochReport&, const encoder::EncoderParams&)> on_epoch_end;
};

struct TrainResult {
  encoder::EncoderParams params;
  OptimizerState state;
  std::optional<double> initial_val_loss;
  std::vector<EpochReport> epochs;
};

/// Eval-mode mean loss over `items`, in consecutive batches of
/// config.batch_size. Empty input yields nullopt.
std::optional<double> evaluation_loss(std::span<const TokenizedTriplet> items,
                                      const encoder::EncoderParams& params,
                                      const TrainConfig& config);

/// Splits [0, n) into batches of batch_size; a trailing batch of one is
/// folded into the previous batch.
std::vector<std::pair<std::size_t, std::size_t>> batch_bounds(std::size_t n,
                                                              std::size_t batch_size);

/// Throws Errc::no_train_data for an empty training set.
TrainResult train(std::span<const triplets::Triplet> train_items,
                  std::span<const triplets::Triplet> val_items, encoder::EncoderParams initial,
                  const TrainConfig& config, const encoder::Tokenizer& tokenizer,
                  const TrainCallbacks& callbacks = {});

struct GradCheckOptions {
  double h = 1e-4;
  std::size_t samples = 50;
  std::uint64_t seed = 0;
  bool train_mode = true;
  /// Applied to the analytic gradient before comparison (checker self-test).
  std::function<void(encoder::EncoderParams&)> tamper;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t coordinates = 0;
};

/// Central differences on `samples` coordinates: a trained tensor is picked
/// uniformly, then an element uniformly (embedding rows restricted to tokens
/// the batch actually reads). Error is |g - g_fd| / max(|g_fd|, 1e-8).
GradCheckResult gradient_check(const encoder::EncoderParams& params,
                               std::span<const triplets::Triplet> batch,
                               const TrainConfig& config, const encoder::Tokenizer& tokenizer,
                               const GradCheckOptions& options = {});

}  // namespace dembed::train
