// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "dembed/error.hpp"

namespace dembed {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::io: return "E_IO";
    case Errc::bad_magic: return "E_BAD_MAGIC";
    case Errc::version_mismatch: return "E_VERSION_MISMATCH";
    case Errc::shape_mismatch: return "E_SHAPE_MISMATCH";
    case Errc::already_split: return "E_ALREADY_SPLIT";
    case Errc::empty_corpus: return "E_EMPTY_CORPUS";
    case Errc::provider_unavailable: return "E_PROVIDER_UNAVAILABLE";
    case Errc::degenerate_paraphrase: return "E_DEGENERATE_PARAPHRASE";
    case Errc::no_eligible_negative: return "E_NO_ELIGIBLE_NEGATIVE";
    case Errc::empty_tokens: return "E_EMPTY_TOKENS";
    case Errc::zero_vector: return "E_ZERO_VECTOR";
    case Errc::length_mismatch: return "E_LENGTH_MISMATCH";
    case Errc::bad_temperature: return "E_BAD_TEMPERATURE";
    case Errc::empty_batch: return "E_EMPTY_BATCH";
    case Errc::bad_schedule: return "E_BAD_SCHEDULE";
    case Errc::nonfinite_grad: return "E_NONFINITE_GRAD";
    case Errc::no_train_data: return "E_NO_TRAIN_DATA";
    case Errc::empty_candidates: return "E_EMPTY_CANDIDATES";
    case Errc::no_relevant: return "E_NO_RELEVANT";
    case Errc::degenerate: return "E_DEGENERATE";
    case Errc::bad_config: return "E_BAD_CONFIG";
    case Errc::invalid_argument: return "E_INVALID_ARGUMENT";
  }
  return "E_UNKNOWN";
}

}  // namespace dembed
