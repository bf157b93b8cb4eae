// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

// InfoNCE with a hard negative and in-batch negatives. For anchor i the
// logits are s(a_i, p_i)/tau, s(a_i, n_i)/tau and s(a_i, p_j)/tau for every
// j != i in the batch; the loss is the batch mean of
// -log softmax(logits)[positive].

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dembed/error.hpp"

namespace dembed::train {

/// Neumaier-compensated running sum.
template <class T>
class CompensatedSum {
 public:
  void add(T x) {
    const T t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      c_ += (sum_ - t) + x;
    } else {
      c_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  T value() const { return sum_ + c_; }

 private:
  T sum_ = 0;
  T c_ = 0;
};

/// Similarities for a batch of n triplets: cross[i * n + j] = s(a_i, p_j)
/// (the diagonal holds the positives) and neg[i] = s(a_i, n_i).
template <class T>
struct SimilarityBatch {
  std::size_t n = 0;
  std::vector<T> cross;
  std::vector<T> neg;
};

template <class T>
struct SimilarityGrad {
  T loss = 0;
  std::vector<T> d_cross;  // d loss / d cross
  std::vector<T> d_neg;
};

/// Loss and its gradient with respect to every similarity. Logits are
/// shifted by their maximum and the positive's term goes through log1p, so
/// the result stays finite and accurate at |s/tau| = 1/tau.
template <class T>
SimilarityGrad<T> infonce_similarity(const SimilarityBatch<T>& batch, T tau,
                                     bool in_batch_negatives = true) {
  const std::size_t n = batch.n;
  if (n == 0) throw Error(Errc::empty_batch, "InfoNCE needs at least one triplet");
  if (batch.cross.size() != n * n || batch.neg.size() != n) {
    throw Error(Errc::length_mismatch, "similarity batch has inconsistent sizes");
  }
  if (!(tau > T(0))) throw Error(Errc::bad_temperature, "temperature must be positive");

  SimilarityGrad<T> out;
  out.d_cross.assign(n * n, T(0));
  out.d_neg.assign(n, T(0));
  CompensatedSum<T> total;
  const T inv_n = T(1) / static_cast<T>(n);

  // Per anchor: slot 0 = positive, slot 1 = hard negative, then j != i.
  std::vector<T> logits;
  std::vector<T> weights;
  for (std::size_t i = 0; i < n; ++i) {
    logits.clear();
    logits.push_back(batch.cross[i * n + i] / tau);
    logits.push_back(batch.neg[i] / tau);
    if (in_batch_negatives) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) logits.push_back(batch.cross[i * n + j] / tau);
      }
    }
    const auto top = static_cast<std::size_t>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    const T m = logits[top];
    weights.resize(logits.size());
    CompensatedSum<T> rest;
    for (std::size_t k = 0; k < logits.size(); ++k) {
      weights[k] = std::exp(logits[k] - m);
      if (k != top) rest.add(weights[k]);
    }
    const T tail = rest.value();
    // -log p_0 = log(sum exp(l)) - l_0 = (m - l_0) + log1p(tail)
    total.add((m - logits[0]) + std::log1p(tail));

    const T denom = T(1) + tail;
    std::size_t k = 0;
    auto grad = [&](T& slot) {
      const T p = weights[k] / denom;
      slot += (p - (k == 0 ? T(1) : T(0))) * inv_n / tau;
      ++k;
    };
    grad(out.d_cross[i * n + i]);
    grad(out.d_neg[i]);
    if (in_batch_negatives) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) grad(out.d_cross[i * n + j]);
      }
    }
  }
  out.loss = total.value() * inv_n;
  return out;
}

template <class T>
struct EmbeddingGrad {
  T loss = 0;
  T mean_pos_sim = 0;
  T mean_neg_sim = 0;
  std::vector<std::vector<T>> d_anchor, d_positive, d_negative;
};

/// InfoNCE over unit-norm embeddings, where cosine similarity is the dot
/// product. Gradients are with respect to the (unit) vectors themselves.
template <class T>
EmbeddingGrad<T> infonce_embeddings(std::span<const std::vector<T>> anchors,
                                    std::span<const std::vector<T>> positives,
                                    std::span<const std::vector<T>> negatives, T tau,
                                    bool in_batch_negatives = true) {
  const std::size_t n = anchors.size();
  if (positives.size() != n || negatives.size() != n) {
    throw Error(Errc::length_mismatch, "anchors, positives and negatives differ in length");
  }
  auto dot = [](const std::vector<T>& a, const std::vector<T>& b) {
    if (a.size() != b.size()) throw Error(Errc::length_mismatch, "embedding dimensions differ");
    T acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
  };
  SimilarityBatch<T> batch;
  batch.n = n;
  batch.cross.resize(n * n);
  batch.neg.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || in_batch_negatives) batch.cross[i * n + j] = dot(anchors[i], positives[j]);
    }
    batch.neg[i] = dot(anchors[i], negatives[i]);
  }
  auto sg = infonce_similarity(batch, tau, in_batch_negatives);

  EmbeddingGrad<T> out;
  out.loss = sg.loss;
  const std::size_t d = n ? anchors[0].size() : 0;
  out.d_anchor.assign(n, std::vector<T>(d, T(0)));
  out.d_positive.assign(n, std::vector<T>(d, T(0)));
  out.d_negative.assign(n, std::vector<T>(d, T(0)));
  auto axpy = [d](std::vector<T>& y, T a, const std::vector<T>& x) {
    for (std::size_t k = 0; k < d; ++k) y[k] += a * x[k];
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const T g = sg.d_cross[i * n + j];
      if (g == T(0)) continue;
      axpy(out.d_anchor[i], g, positives[j]);
      axpy(out.d_positive[j], g, anchors[i]);
    }
    axpy(out.d_anchor[i], sg.d_neg[i], negatives[i]);
    axpy(out.d_negative[i], sg.d_neg[i], anchors[i]);
    out.mean_pos_sim += batch.cross[i * n + i];
    out.mean_neg_sim += batch.neg[i];
  }
  if (n) {
    out.mean_pos_sim /= static_cast<T>(n);
    out.mean_neg_sim /= static_cast<T>(n);
  }
  return out;
}

/// Batch-mean InfoNCE loss over arbitrary (nonzero) embeddings using cosine
/// similarity.
double infonce_loss(std::span<const std::vector<double>> anchors,
                    std::span<const std::vector<double>> positives,
                    std::span<const std::vector<double>> negatives, double tau,
                    bool in_batch_negatives = true);

}  // namespace dembed::train
