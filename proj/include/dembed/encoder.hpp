// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

// Compact sentence encoder: hashed token embeddings, pooling, two affine
// layers (tanh between) each carrying a low-rank adapter, L2-normalized
// output.
//
//   x  = pool(E[tokens])
//   h  = tanh(x W1 + b1 + s * B1 A1 drop(x))
//   z  = h W2 + b2 + s * B2 A2 drop(h)
//   y  = z / |z|
//
// with s = lora_alpha / lora_rank. drop() is an inverted Bernoulli mask that
// is only active in train mode.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dembed/tensor.hpp"
#include "dembed/tokenizer.hpp"

namespace dembed::encoder {

enum class Pooling { mean, last_token };

std::string_view pooling_name(Pooling pooling) noexcept;
Pooling parse_pooling(std::string_view name);

struct LoraAdapter {
  Tensor A;  // rank x in
  Tensor B;  // out x rank

  friend bool operator==(const LoraAdapter&, const LoraAdapter&) = default;
};

struct Affine {
  Tensor W;  // in x out
  Tensor b;  // out
  LoraAdapter lora;

  friend bool operator==(const Affine&, const Affine&) = default;
};

struct EncoderConfig {
  std::size_t vocab_size = kDefaultVocabSize;
  std::size_t d_emb = 64;
  std::size_t d_hid = 128;
  std::size_t d_out = 64;
  std::size_t lora_rank = 16;
  double lora_alpha = 32.0;
  double lora_dropout = 0.05;
};

struct EncoderParams {
  Tensor embedding;  // vocab x d_emb
  Affine layer1;     // d_emb -> d_hid
  Affine layer2;     // d_hid -> d_out
  double lora_alpha = 32.0;
  double lora_dropout = 0.05;

  std::size_t vocab_size() const noexcept { return embedding.rows(); }
  std::size_t d_emb() const noexcept { return embedding.cols(); }
  std::size_t d_hid() const noexcept { return layer1.W.cols(); }
  std::size_t d_out() const noexcept { return layer2.W.cols(); }
  std::size_t lora_rank() const noexcept { return layer1.lora.A.rows(); }
  double lora_scale() const noexcept { return lora_alpha / static_cast<double>(lora_rank()); }
  EncoderConfig config() const;

  /// Visits every tensor with its canonical name, in canonical order.
  void for_each_tensor(const std::function<void(std::string_view, Tensor&)>& fn);
  void for_each_tensor(const std::function<void(std::string_view, const Tensor&)>& fn) const;

  Tensor* find(std::string_view name);
  const Tensor* find(std::string_view name) const;

  /// Same shapes and hyperparameters, all tensors zero.
  EncoderParams zeros_like() const;

  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

/// Canonical tensor names: "embedding", "layer{1,2}.{weight,bias,lora_A,lora_B}".
std::span<const std::string_view> tensor_names() noexcept;
bool is_adapter_tensor(std::string_view name) noexcept;

/// E, W1, W2 ~ U(-0.05, 0.05); biases 0; A ~ N(0, 0.02^2); B = 0. Values
/// are rounded to float so a fresh model survives a checkpoint round-trip
/// unchanged.
EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed);

/// Throws Errc::shape_mismatch on inconsistent shapes or non-finite values.
void validate(const EncoderParams& params);

/// scale * (B A)^T, laid out like W (in x out).
Tensor adapter_delta(const Affine& layer, double scale);
Tensor effective_weight(const Affine& layer, double scale);

using Embedding = std::vector<double>;

/// Dropout multiplier (0 or 1/(1-p)) for one unit. Counter-based, so masks
/// depend only on (seed, item, layer, unit).
double dropout_multiplier(std::uint64_t seed, std::size_t item, int layer, std::size_t unit,
                          double p) noexcept;

struct ForwardTrace {
  std::vector<TokenId> tokens;
  std::vector<double> pooled;    // x
  std::vector<double> mask1;     // empty in eval mode
  std::vector<double> u1;        // A1 drop(x)
  std::vector<double> hidden;    // h
  std::vector<double> mask2;
  std::vector<double> u2;        // A2 drop(h)
  std::vector<double> pre_norm;  // z
  double norm = 0.0;
  std::vector<double> output;    // y
};

struct ForwardOptions {
  Pooling pooling = Pooling::last_token;
  bool train_mode = false;
  std::uint64_t seed = 0;
  std::size_t item = 0;  // index of this text within its batch (dropout stream)
};

/// Throws Errc::empty_tokens for an empty token list and Errc::zero_vector
/// if the pre-normalization output vanishes.
ForwardTrace forward(std::span<const TokenId> tokens, const EncoderParams& params,
                     const ForwardOptions& options);

/// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output).
/// With adapters_only, only the lora_A / lora_B tensors are touched.
void backward(const ForwardTrace& trace, std::span<const double> d_output,
              const EncoderParams& params, EncoderParams& grads, Pooling pooling,
              bool adapters_only);

struct EncodeOptions {
  Pooling pooling = Pooling::last_token;
  bool train_mode = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

std::vector<Embedding> encode_batch(std::span<const std::string> texts,
                                    const EncoderParams& params, const Tokenizer& tokenizer,
                                    const EncodeOptions& options = {});

/// u.v / (|u| |v|), clamped to [-1, 1]. Throws Errc::zero_vector.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

// Checkpoint file ("CEMB"): magic, u32 version, u32 tensor count, then per
// tensor u16 name length, name bytes, u8 rank, u32 dims, f32 LE row-major.
// lora_alpha and lora_dropout travel as rank-0 tensors.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const EncoderParams& params);
EncoderParams parse_checkpoint(std::string_view bytes);
void save_checkpoint(const EncoderParams& params, const std::filesystem::path& path);
EncoderParams load_checkpoint(const std::filesystem::path& path);

}  // namespace dembed::encoder
