# Copyright 2026 The dembed Authors
# SPDX-License-Identifier: Apache-2.0

"""Python bindings for the dembed sentence-embedding toolkit."""

from ._dembed import (
    DembedError,
    Encoder,
    accuracy_at_k,
    clean_text,
    cosine_similarity,
    dedup_key,
    fallback_paraphrase,
    filter_short,
    gold_ranks,
    infonce_loss,
    lr_at_step,
    mean_reciprocal_rank,
    ndcg_at_k,
    prepare_corpus,
    recall_at_k,
    run_cli,
    segment_sentences,
    sha256_hex,
    spearman_rho,
    tokenize,
)

__all__ = [
    "DembedError",
    "Encoder",
    "accuracy_at_k",
    "clean_text",
    "cosine_similarity",
    "dedup_key",
    "fallback_paraphrase",
    "filter_short",
    "gold_ranks",
    "infonce_loss",
    "lr_at_step",
    "mean_reciprocal_rank",
    "ndcg_at_k",
    "prepare_corpus",
    "recall_at_k",
    "run_cli",
    "segment_sentences",
    "sha256_hex",
    "spearman_rho",
    "tokenize",
]
