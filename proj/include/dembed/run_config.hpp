// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

// Training run configuration (JSON) and the provenance record written at
// the end of every run.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dembed/encoder.hpp"
#include "dembed/trainer.hpp"

namespace dembed::run {

namespace fs = std::filesystem;

struct RunConfig {
  train::TrainConfig train;
  encoder::EncoderConfig encoder;
  std::string triplets;
  std::string val;
  std::string out_dir;
  std::string corpus;
  std::size_t min_distance = 500;
  bool cross_source = false;
  std::string provider = "fallback";
};

/// Every field as a flat JSON object with a fixed key order.
std::string config_to_json(const RunConfig& config);

/// Overwrites the fields named in `json`. Unknown keys and wrongly typed
/// values throw Errc::bad_config.
void apply_config_json(RunConfig& config, std::string_view json);

RunConfig load_config(const fs::path& path, RunConfig base = {});

struct FileDigest {
  std::string path;
  std::string sha256;

  friend bool operator==(const FileDigest&, const FileDigest&) = default;
};

struct RunMetadata {
  std::string command;
  std::string config_json;  // a JSON object
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, std::string> versions;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  double duration_seconds = 0.0;
};

/// Tool and on-disk format versions recorded with every run.
std::map<std::string, std::string> artifact_versions();

std::vector<FileDigest> digest_files(const std::vector<fs::path>& paths);

std::string metadata_to_json(const RunMetadata& metadata);
RunMetadata metadata_from_json(std::string_view text);
void write_metadata(const fs::path& path, const RunMetadata& metadata);
RunMetadata read_metadata(const fs::path& path);

}  // namespace dembed::run
