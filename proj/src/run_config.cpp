// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "dembed/run_config.hpp"

#include "dembed/corpus.hpp"
#include "dembed/error.hpp"
#include "dembed/storage.hpp"
#include "json.hpp"

#ifndef DEMBED_VERSION
#define DEMBED_VERSION "0.0.0"
#endif

namespace dembed::run {

namespace {

using Json = nlohmann::ordered_json;

Json to_json(const RunConfig& c) {
  const auto& t = c.train;
  const auto& e = c.encoder;
  return Json{
      {"epochs", t.epochs},
      {"batch_size", t.batch_size},
      {"lr", t.peak_lr},
      {"warmup_frac", t.warmup_frac},
      {"min_lr", t.min_lr},
      {"temperature", t.temperature},
      {"weight_decay", t.weight_decay},
      {"beta1", t.beta1},
      {"beta2", t.beta2},
      {"eps", t.eps},
      {"seed", t.seed},
      {"lora_only", t.train_lora_only},
      {"pooling", std::string(encoder::pooling_name(t.pooling))},
      {"in_batch_negatives", t.in_batch_negatives},
      {"threads", t.threads},
      {"vocab_size", e.vocab_size},
      {"d_emb", e.d_emb},
      {"d_hid", e.d_hid},
      {"d_out", e.d_out},
      {"lora_rank", e.lora_rank},
      {"lora_alpha", e.lora_alpha},
      {"lora_dropout", e.lora_dropout},
      {"triplets", c.triplets},
      {"val", c.val},
      {"out_dir", c.out_dir},
      {"corpus", c.corpus},
      {"min_distance", c.min_distance},
      {"cross_source", c.cross_source},
      {"provider", c.provider},
  };
}

template <class T>
void read_into(const Json& v, T& out, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw Error(Errc::bad_config, "'" + key + "' must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_unsigned()) {
        throw Error(Errc::bad_config, "'" + key + "' must be a nonnegative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw Error(Errc::bad_config, "'" + key + "' must be a number");
    } else {
      if (!v.is_string()) throw Error(Errc::bad_config, "'" + key + "' must be a string");
    }
    out = v.get<T>();
  } catch (const Json::exception& e) {
    throw Error(Errc::bad_config, "'" + key + "': " + e.what());
  }
}

}  // namespace

std::string config_to_json(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

void apply_config_json(RunConfig& c, std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(Errc::bad_config, std::string("malformed config: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::bad_config, "config must be a JSON object");
  auto& t = c.train;
  auto& e = c.encoder;
  for (const auto& [key, v] : j.items()) {
    if (key == "epochs") read_into(v, t.epochs, key);
    else if (key == "batch_size") read_into(v, t.batch_size, key);
    else if (key == "lr") read_into(v, t.peak_lr, key);
    else if (key == "warmup_frac") read_into(v, t.warmup_frac, key);
    else if (key == "min_lr") read_into(v, t.min_lr, key);
    else if (key == "temperature") read_into(v, t.temperature, key);
    else if (key == "weight_decay") read_into(v, t.weight_decay, key);
    else if (key == "beta1") read_into(v, t.beta1, key);
    else if (key == "beta2") read_into(v, t.beta2, key);
    else if (key == "eps") read_into(v, t.eps, key);
    else if (key == "seed") read_into(v, t.seed, key);
    else if (key == "lora_only") read_into(v, t.train_lora_only, key);
    else if (key == "pooling") {
      std::string name;
      read_into(v, name, key);
      try {
        t.pooling = encoder::parse_pooling(name);
      } catch (const Error& err) {
        throw Error(Errc::bad_config, err.what());
      }
    }
    else if (key == "in_batch_negatives") read_into(v, t.in_batch_negatives, key);
    else if (key == "threads") read_into(v, t.threads, key);
    else if (key == "vocab_size") read_into(v, e.vocab_size, key);
    else if (key == "d_emb") read_into(v, e.d_emb, key);
    else if (key == "d_hid") read_into(v, e.d_hid, key);
    else if (key == "d_out") read_into(v, e.d_out, key);
    else if (key == "lora_rank") read_into(v, e.lora_rank, key);
    else if (key == "lora_alpha") read_into(v, e.lora_alpha, key);
    else if (key == "lora_dropout") read_into(v, e.lora_dropout, key);
    else if (key == "triplets") read_into(v, c.triplets, key);
    else if (key == "val") read_into(v, c.val, key);
    else if (key == "out_dir") read_into(v, c.out_dir, key);
    else if (key == "corpus") read_into(v, c.corpus, key);
    else if (key == "min_distance") read_into(v, c.min_distance, key);
    else if (key == "cross_source") read_into(v, c.cross_source, key);
    else if (key == "provider") read_into(v, c.provider, key);
    else throw Error(Errc::bad_config, "unknown config key '" + key + "'");
  }
}

RunConfig load_config(const fs::path& path, RunConfig base) {
  apply_config_json(base, storage::read_file(path));
  return base;
}

std::map<std::string, std::string> artifact_versions() {
  return {
      {"dembed", DEMBED_VERSION},
      {"checkpoint_format", "CEMB/" + std::to_string(encoder::kCheckpointVersion)},
      {"embedding_format", "CEVX/" + std::to_string(storage::kEmbeddingVersion)},
      {"tokenizer", std::string(encoder::Tokenizer::kScheme)},
      {"abbreviations", std::string(corpus::kAbbreviationListVersion)},
  };
}

std::vector<FileDigest> digest_files(const std::vector<fs::path>& paths) {
  std::vector<FileDigest> out;
  for (const auto& p : paths) out.push_back({p.generic_string(), storage::digest(p)});
  return out;
}

std::string metadata_to_json(const RunMetadata& m) {
  Json j;
  j["command"] = m.command;
  j["config"] = m.config_json.empty() ? Json::object() : Json::parse(m.config_json);
  j["seeds"] = m.seeds;
  j["versions"] = m.versions;
  auto files = [](const std::vector<FileDigest>& fs) {
    Json arr = Json::array();
    for (const auto& f : fs) arr.push_back({{"path", f.path}, {"sha256", f.sha256}});
    return arr;
  };
  j["inputs"] = files(m.inputs);
  j["outputs"] = files(m.outputs);
  j["duration_seconds"] = m.duration_seconds;
  return j.dump(2) + "\n";
}

RunMetadata metadata_from_json(std::string_view text) {
  try {
    const Json j = Json::parse(text);
    RunMetadata m;
    m.command = j.at("command").get<std::string>();
    m.config_json = j.at("config").dump();
    m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    m.versions = j.at("versions").get<std::map<std::string, std::string>>();
    for (const auto& f : j.at("inputs")) m.inputs.push_back({f.at("path"), f.at("sha256")});
    for (const auto& f : j.at("outputs")) m.outputs.push_back({f.at("path"), f.at("sha256")});
    m.duration_seconds = j.at("duration_seconds").get<double>();
    return m;
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("malformed run metadata: ") + e.what());
  }
}

void write_metadata(const fs::path& path, const RunMetadata& metadata) {
  storage::write_atomic(path, metadata_to_json(metadata));
}

RunMetadata read_metadata(const fs::path& path) {
  return metadata_from_json(storage::read_file(path));
}

}  // namespace dembed::run
