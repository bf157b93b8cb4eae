// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "dembed/cli.hpp"

int main(int argc, char** argv) { return dembed::cli::run(argc, argv); }
