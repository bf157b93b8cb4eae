// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "dembed/encoder.hpp"

#include <array>
#include <cmath>

#include "dembed/error.hpp"
#include "dembed/parallel.hpp"
#include "dembed/rng.hpp"

namespace dembed::encoder {

namespace {

constexpr std::array<std::string_view, 9> kTensorNames = {
    "embedding",     "layer1.weight", "layer1.bias",   "layer1.lora_A", "layer1.lora_B",
    "layer2.weight", "layer2.bias",   "layer2.lora_A", "layer2.lora_B",
};

template <class Params, class Fn>
void visit(Params& p, Fn&& fn) {
  fn(kTensorNames[0], p.embedding);
  fn(kTensorNames[1], p.layer1.W);
  fn(kTensorNames[2], p.layer1.b);
  fn(kTensorNames[3], p.layer1.lora.A);
  fn(kTensorNames[4], p.layer1.lora.B);
  fn(kTensorNames[5], p.layer2.W);
  fn(kTensorNames[6], p.layer2.b);
  fn(kTensorNames[7], p.layer2.lora.A);
  fn(kTensorNames[8], p.layer2.lora.B);
}

double as_float(double v) { return static_cast<double>(static_cast<float>(v)); }

// out = b + x W + scale * B (A x_in); records u = A x_in.
void affine_forward(const Affine& layer, double scale, std::span<const double> x,
                    std::span<const double> x_in, std::vector<double>& u,
                    std::vector<double>& out) {
  const std::size_t in = layer.W.rows();
  const std::size_t n_out = layer.W.cols();
  const std::size_t rank = layer.lora.A.rows();
  out.assign(layer.b.data.begin(), layer.b.data.end());
  for (std::size_t i = 0; i < in; ++i) {
    const double xi = x[i];
    const double* w = layer.W.data.data() + i * n_out;
    for (std::size_t j = 0; j < n_out; ++j) out[j] += xi * w[j];
  }
  u.assign(rank, 0.0);
  for (std::size_t k = 0; k < rank; ++k) {
    const double* a = layer.lora.A.data.data() + k * in;
    double acc = 0.0;
    for (std::size_t i = 0; i < in; ++i) acc += a[i] * x_in[i];
    u[k] = acc;
  }
  for (std::size_t j = 0; j < n_out; ++j) {
    const double* b = layer.lora.B.data.data() + j * rank;
    double acc = 0.0;
    for (std::size_t k = 0; k < rank; ++k) acc += b[k] * u[k];
    out[j] += scale * acc;
  }
}

// Given d_out, accumulates parameter grads and writes d(input) to dx.
void affine_backward(const Affine& layer, Affine& grad, double scale, std::span<const double> x,
                     std::span<const double> x_in, std::span<const double> mask,
                     std::span<const double> u, std::span<const double> d_out,
                     bool adapters_only, std::vector<double>* dx) {
  const std::size_t in = layer.W.rows();
  const std::size_t n_out = layer.W.cols();
  const std::size_t rank = layer.lora.A.rows();

  if (!adapters_only) {
    for (std::size_t i = 0; i < in; ++i) {
      double* g = grad.W.data.data() + i * n_out;
      for (std::size_t j = 0; j < n_out; ++j) g[j] += x[i] * d_out[j];
    }
    for (std::size_t j = 0; j < n_out; ++j) grad.b.data[j] += d_out[j];
  }

  std::vector<double> du(rank, 0.0);
  for (std::size_t j = 0; j < n_out; ++j) {
    const double* b = layer.lora.B.data.data() + j * rank;
    double* gb = grad.lora.B.data.data() + j * rank;
    const double dj = scale * d_out[j];
    for (std::size_t k = 0; k < rank; ++k) {
      gb[k] += dj * u[k];
      du[k] += dj * b[k];
    }
  }
  for (std::size_t k = 0; k < rank; ++k) {
    double* ga = grad.lora.A.data.data() + k * in;
    for (std::size_t i = 0; i < in; ++i) ga[i] += du[k] * x_in[i];
  }

  if (dx == nullptr) return;
  dx->assign(in, 0.0);
  for (std::size_t i = 0; i < in; ++i) {
    const double* w = layer.W.data.data() + i * n_out;
    double acc = 0.0;
    for (std::size_t j = 0; j < n_out; ++j) acc += w[j] * d_out[j];
    (*dx)[i] = acc;
  }
  for (std::size_t i = 0; i < in; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < rank; ++k) acc += layer.lora.A.data[k * in + i] * du[k];
    (*dx)[i] += (mask.empty() ? 1.0 : mask[i]) * acc;
  }
}

std::vector<double> apply_mask(std::span<const double> v, std::span<const double> mask) {
  std::vector<double> out(v.begin(), v.end());
  if (!mask.empty()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  }
  return out;
}

std::vector<double> make_mask(const EncoderParams& params, const ForwardOptions& options,
                              int layer, std::size_t n) {
  if (!options.train_mode || params.lora_dropout <= 0.0) return {};
  std::vector<double> mask(n);
  for (std::size_t i = 0; i < n; ++i) {
    mask[i] = dropout_multiplier(options.seed, options.item, layer, i, params.lora_dropout);
  }
  return mask;
}

}  // namespace

std::string_view pooling_name(Pooling pooling) noexcept {
  return pooling == Pooling::mean ? "mean" : "last_token";
}

Pooling parse_pooling(std::string_view name) {
  if (name == "mean") return Pooling::mean;
  if (name == "last_token") return Pooling::last_token;
  throw Error(Errc::invalid_argument, "unknown pooling '" + std::string(name) + "'");
}

EncoderConfig EncoderParams::config() const {
  return {vocab_size(), d_emb(), d_hid(), d_out(), lora_rank(), lora_alpha, lora_dropout};
}

void EncoderParams::for_each_tensor(const std::function<void(std::string_view, Tensor&)>& fn) {
  visit(*this, fn);
}

void EncoderParams::for_each_tensor(
    const std::function<void(std::string_view, const Tensor&)>& fn) const {
  visit(*this, fn);
}

Tensor* EncoderParams::find(std::string_view name) {
  Tensor* hit = nullptr;
  for_each_tensor([&](std::string_view n, Tensor& t) {
    if (n == name) hit = &t;
  });
  return hit;
}

const Tensor* EncoderParams::find(std::string_view name) const {
  return const_cast<EncoderParams*>(this)->find(name);
}

EncoderParams EncoderParams::zeros_like() const {
  EncoderParams out = *this;
  out.for_each_tensor([](std::string_view, Tensor& t) { t.fill(0.0); });
  return out;
}

std::span<const std::string_view> tensor_names() noexcept { return kTensorNames; }

bool is_adapter_tensor(std::string_view name) noexcept {
  return name.ends_with(".lora_A") || name.ends_with(".lora_B");
}

EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed) {
  if (config.lora_rank == 0) throw Error(Errc::invalid_argument, "lora_rank must be >= 1");
  if (config.vocab_size == 0 || config.d_emb == 0 || config.d_hid == 0 || config.d_out == 0) {
    throw Error(Errc::invalid_argument, "encoder dimensions must be positive");
  }
  if (!(config.lora_dropout >= 0.0 && config.lora_dropout < 1.0)) {
    throw Error(Errc::invalid_argument, "lora_dropout must lie in [0, 1)");
  }
  const std::size_t r = config.lora_rank;
  EncoderParams p;
  p.embedding = Tensor({config.vocab_size, config.d_emb});
  p.layer1 = {Tensor({config.d_emb, config.d_hid}), Tensor({config.d_hid}),
              {Tensor({r, config.d_emb}), Tensor({config.d_hid, r})}};
  p.layer2 = {Tensor({config.d_hid, config.d_out}), Tensor({config.d_out}),
              {Tensor({r, config.d_hid}), Tensor({config.d_out, r})}};
  p.lora_alpha = as_float(config.lora_alpha);
  p.lora_dropout = as_float(config.lora_dropout);

  auto uniform = [&](Tensor& t, std::string_view stream) {
    Rng rng(derive_seed(seed, stream));
    for (auto& v : t.data) v = as_float(rng.uniform(-0.05, 0.05));
  };
  auto gaussian = [&](Tensor& t, std::string_view stream) {
    Rng rng(derive_seed(seed, stream));
    for (auto& v : t.data) v = as_float(rng.normal(0.0, 0.02));
  };
  uniform(p.embedding, "embedding");
  uniform(p.layer1.W, "layer1.weight");
  uniform(p.layer2.W, "layer2.weight");
  gaussian(p.layer1.lora.A, "layer1.lora_A");
  gaussian(p.layer2.lora.A, "layer2.lora_A");
  return p;
}

void validate(const EncoderParams& p) {
  const std::size_t r = p.lora_rank();
  auto expect = [](const Tensor& t, std::vector<std::size_t> shape, std::string_view name) {
    if (t.shape != shape || t.data.size() != Tensor::element_count(shape)) {
      throw Error(Errc::shape_mismatch, "tensor " + std::string(name) + " has wrong shape");
    }
  };
  if (p.embedding.shape.size() != 2 || r == 0) {
    throw Error(Errc::shape_mismatch, "malformed embedding or adapter rank");
  }
  const std::size_t e = p.d_emb(), h = p.layer1.W.cols(), o = p.layer2.W.cols();
  expect(p.layer1.W, {e, h}, "layer1.weight");
  expect(p.layer1.b, {h}, "layer1.bias");
  expect(p.layer1.lora.A, {r, e}, "layer1.lora_A");
  expect(p.layer1.lora.B, {h, r}, "layer1.lora_B");
  expect(p.layer2.W, {h, o}, "layer2.weight");
  expect(p.layer2.b, {o}, "layer2.bias");
  expect(p.layer2.lora.A, {r, h}, "layer2.lora_A");
  expect(p.layer2.lora.B, {o, r}, "layer2.lora_B");
  p.for_each_tensor([](std::string_view name, const Tensor& t) {
    for (double v : t.data) {
      if (!std::isfinite(v)) {
        throw Error(Errc::shape_mismatch, "tensor " + std::string(name) + " has non-finite values");
      }
    }
  });
}

Tensor adapter_delta(const Affine& layer, double scale) {
  const std::size_t in = layer.W.rows(), out = layer.W.cols(), rank = layer.lora.A.rows();
  Tensor delta({in, out});
  for (std::size_t i = 0; i < in; ++i) {
    for (std::size_t j = 0; j < out; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < rank; ++k) acc += layer.lora.B(j, k) * layer.lora.A(k, i);
      delta(i, j) = scale * acc;
    }
  }
  return delta;
}

Tensor effective_weight(const Affine& layer, double scale) {
  Tensor w = adapter_delta(layer, scale);
  for (std::size_t i = 0; i < w.size(); ++i) w.data[i] += layer.W.data[i];
  return w;
}

double dropout_multiplier(std::uint64_t seed, std::size_t item, int layer, std::size_t unit,
                          double p) noexcept {
  if (p <= 0.0) return 1.0;
  std::uint64_t key = derive_seed(seed, static_cast<std::uint64_t>(item));
  key = splitmix64(key ^ (static_cast<std::uint64_t>(layer) << 56) ^ unit);
  return to_unit_interval(key) < p ? 0.0 : 1.0 / (1.0 - p);
}

ForwardTrace forward(std::span<const TokenId> tokens, const EncoderParams& params,
                     const ForwardOptions& options) {
  if (tokens.empty()) throw Error(Errc::empty_tokens, "text produced no tokens");
  ForwardTrace t;
  t.tokens.assign(tokens.begin(), tokens.end());
  const std::size_t d = params.d_emb();
  const double scale = params.lora_scale();

  if (options.pooling == Pooling::last_token) {
    const auto row = params.embedding.row(tokens.back());
    t.pooled.assign(row.begin(), row.end());
  } else {
    t.pooled.assign(d, 0.0);
    for (TokenId id : tokens) {
      const auto row = params.embedding.row(id);
      for (std::size_t i = 0; i < d; ++i) t.pooled[i] += row[i];
    }
    const double inv = 1.0 / static_cast<double>(tokens.size());
    for (auto& v : t.pooled) v *= inv;
  }

  t.mask1 = make_mask(params, options, 1, d);
  std::vector<double> z1;
  affine_forward(params.layer1, scale, t.pooled, apply_mask(t.pooled, t.mask1), t.u1, z1);
  t.hidden.resize(z1.size());
  for (std::size_t j = 0; j < z1.size(); ++j) t.hidden[j] = std::tanh(z1[j]);

  t.mask2 = make_mask(params, options, 2, t.hidden.size());
  affine_forward(params.layer2, scale, t.hidden, apply_mask(t.hidden, t.mask2), t.u2, t.pre_norm);

  double ss = 0.0;
  for (double v : t.pre_norm) ss += v * v;
  t.norm = std::sqrt(ss);
  if (!(t.norm > 0.0) || !std::isfinite(t.norm)) {
    throw Error(Errc::zero_vector, "encoder output has zero or non-finite norm");
  }
  t.output.resize(t.pre_norm.size());
  for (std::size_t j = 0; j < t.output.size(); ++j) t.output[j] = t.pre_norm[j] / t.norm;
  return t;
}

void backward(const ForwardTrace& t, std::span<const double> d_output,
              const EncoderParams& params, EncoderParams& grads, Pooling pooling,
              bool adapters_only) {
  const double scale = params.lora_scale();

  // y = z/|z|  =>  dz = (dy - y (y.dy)) / |z|
  double dot = 0.0;
  for (std::size_t j = 0; j < t.output.size(); ++j) dot += t.output[j] * d_output[j];
  std::vector<double> dz(t.output.size());
  for (std::size_t j = 0; j < dz.size(); ++j) {
    dz[j] = (d_output[j] - t.output[j] * dot) / t.norm;
  }

  std::vector<double> dh;
  affine_backward(params.layer2, grads.layer2, scale, t.hidden, apply_mask(t.hidden, t.mask2),
                  t.mask2, t.u2, dz, adapters_only, &dh);
  for (std::size_t j = 0; j < dh.size(); ++j) dh[j] *= 1.0 - t.hidden[j] * t.hidden[j];

  std::vector<double> dx;
  affine_backward(params.layer1, grads.layer1, scale, t.pooled, apply_mask(t.pooled, t.mask1),
                  t.mask1, t.u1, dh, adapters_only, adapters_only ? nullptr : &dx);
  if (adapters_only) return;

  if (pooling == Pooling::last_token) {
    auto row = grads.embedding.row(t.tokens.back());
    for (std::size_t i = 0; i < dx.size(); ++i) row[i] += dx[i];
  } else {
    const double inv = 1.0 / static_cast<double>(t.tokens.size());
    for (TokenId id : t.tokens) {
      auto row = grads.embedding.row(id);
      for (std::size_t i = 0; i < dx.size(); ++i) row[i] += dx[i] * inv;
    }
  }
}

std::vector<Embedding> encode_batch(std::span<const std::string> texts,
                                    const EncoderParams& params, const Tokenizer& tokenizer,
                                    const EncodeOptions& options) {
  if (tokenizer.vocab_size() != params.vocab_size()) {
    throw Error(Errc::shape_mismatch, "tokenizer vocabulary does not match the embedding table");
  }
  std::vector<std::vector<TokenId>> tokens(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    tokens[i] = tokenizer.tokenize(texts[i]);
    if (tokens[i].empty()) {
      throw Error(Errc::empty_tokens, "text " + std::to_string(i) + " produced no tokens");
    }
  }
  std::vector<Embedding> out(texts.size());
  parallel_for(texts.size(), options.threads, [&](std::size_t i) {
    ForwardOptions fo{options.pooling, options.train_mode, options.seed, i};
    out[i] = std::move(forward(tokens[i], params, fo).output);
  });
  return out;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw Error(Errc::length_mismatch, "vector dimensions differ");
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw Error(Errc::zero_vector, "cosine of a zero vector");
  return std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

}  // namespace dembed::encoder
