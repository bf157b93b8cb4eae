// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dembed {

enum class Errc {
  io,
  bad_magic,
  version_mismatch,
  shape_mismatch,
  already_split,
  empty_corpus,
  provider_unavailable,
  degenerate_paraphrase,
  no_eligible_negative,
  empty_tokens,
  zero_vector,
  length_mismatch,
  bad_temperature,
  empty_batch,
  bad_schedule,
  nonfinite_grad,
  no_train_data,
  empty_candidates,
  no_relevant,
  degenerate,
  bad_config,
  invalid_argument,
};

/// Stable identifier used in diagnostics, e.g. "E_BAD_MAGIC".
std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace dembed
