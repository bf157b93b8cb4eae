// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "doctest.h"
#include "json.hpp"
#include "dembed/cli.hpp"
#include "dembed/eval.hpp"
#include "dembed/rng.hpp"
#include "dembed/run_config.hpp"
#include "dembed/storage.hpp"

namespace fs = std::filesystem;
using namespace dembed;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct Workspace {
  fs::path root;
  Workspace() {
    root = fs::temp_directory_path() / ("dembed_cli_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root / "docs");
    Rng rng(1);
    const std::vector<std::string> words{"atrial", "valve", "pressure", "ventricle", "septal",
                                         "murmur", "rhythm", "aortic", "mitral", "flow",
                                         "wall", "dilated", "normal", "mild", "severe"};
    for (std::string book : {"cardio", "echo", "ecg"}) {
      std::ofstream f(root / "docs" / (book + ".txt"));
      for (int s = 0; s < 40; ++s) {
        std::string sentence = "The";
        for (int w = 0; w < 8; ++w) sentence += " " + words[rng.uniform_index(words.size())];
        f << sentence << " " << book << " " << s << ". ";
        if (s % 10 == 9) f << "\n\n";
      }
    }
    std::ofstream(root / "small.json") << R"({"vocab_size": 512, "d_emb": 8, "d_hid": 12,
      "d_out": 8, "lora_rank": 2, "lora_alpha": 4.0, "batch_size": 16, "epochs": 2,
      "lr": 0.01, "pooling": "mean"})";
  }
  ~Workspace() { fs::remove_all(root); }
  std::string at(const std::string& name) const { return (root / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with 1") {
  auto r = invoke({"prepare", "--in", "x", "--out", "y", "--bogus"});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("--bogus") != std::string::npos);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(invoke({}).code == cli::kExitUsage);
  CHECK(invoke({"frobnicate"}).code == cli::kExitUsage);
  CHECK(invoke({"eval", "--embeddings", "e", "--pairs", "p", "--gain", "log"}).code == cli::kExitUsage);
  r = invoke({"--help"});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("gradcheck") != std::string::npos);
}

TEST_CASE("data errors exit with 2") {
  Workspace ws;
  std::ofstream(ws.at("empty.jsonl")).flush();
  auto r = invoke({"train", "--triplets", ws.at("empty.jsonl"), "--out-dir", ws.at("run")});
  CHECK(r.code == cli::kExitData);
  CHECK(r.err.find("E_NO_TRAIN_DATA") != std::string::npos);
  r = invoke({"prepare", "--in", ws.at("missing"), "--out", ws.at("m.jsonl")});
  CHECK(r.code == cli::kExitData);
  r = invoke({"embed", "--checkpoint", ws.at("small.json"), "--texts", ws.at("x"), "--out", ws.at("e")});
  CHECK(r.code == cli::kExitData);
  CHECK(r.err.find("E_BAD_MAGIC") != std::string::npos);
}

TEST_CASE("full pipeline through the command line") {
  Workspace ws;
  auto r = invoke({"prepare", "--in", ws.at("docs"), "--out", ws.at("corpus.jsonl"), "--seed", "7"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto manifest = storage::read_manifest(ws.at("corpus.jsonl"));
  CHECK(manifest.records.size() == 120);
  CHECK(manifest.per_source_counts.at("echo") == 40);
  CHECK(fs::exists(ws.at("corpus.jsonl.meta.json")));

  r = invoke({"stats", "--corpus", ws.at("corpus.jsonl")});
  REQUIRE(r.code == 0);
  const auto stats = nlohmann::json::parse(r.out);
  CHECK(stats.at("sentence_count") == 120);

  r = invoke({"triplets", "--corpus", ws.at("corpus.jsonl"), "--out", ws.at("triplets.jsonl"),
           "--cross-source", "--seed", "3"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto trip = storage::read_triplets(ws.at("triplets.jsonl"));
  CHECK(trip.size() == 120);

  r = invoke({"--threads", "2", "train", "--triplets", ws.at("triplets.jsonl"), "--config",
           ws.at("small.json"), "--out-dir", ws.at("run"), "--seed", "5"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* f : {"epoch-0.cemb", "epoch-1.cemb", "epoch-2.cemb", "train_log.jsonl",
                        "train_report.json", "run_metadata.json"}) {
    CHECK_MESSAGE(fs::exists(ws.root / "run" / f), f);
  }
  const auto meta = run::read_metadata(ws.root / "run" / "run_metadata.json");
  for (const auto& f : meta.outputs) CHECK(storage::digest(f.path) == f.sha256);
  CHECK(meta.seeds.at("seed") == 5);
  const auto report = nlohmann::json::parse(storage::read_file(ws.root / "run" / "train_report.json"));
  CHECK(report.at("epochs").size() == 2);

  r = invoke({"embed", "--checkpoint", ws.at("run/epoch-2.cemb"), "--texts", ws.at("triplets.jsonl"),
           "--out", ws.at("emb.cevx"), "--pooling", "mean", "--split", "val", "--pairs-out",
           ws.at("pairs.tsv")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto table = storage::read_embeddings(ws.at("emb.cevx"));
  CHECK(table.dim == 8);
  CHECK(table.ids.size() == 2 * storage::read_pairs_tsv(ws.at("pairs.tsv")).size());

  r = invoke({"eval", "--embeddings", ws.at("emb.cevx"), "--pairs", ws.at("pairs.tsv"), "--k", "1,5",
           "--name", "tiny", "--out", ws.at("report.json"), "--table"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto rep = eval::report_from_json(storage::read_file(ws.at("report.json")));
  CHECK(rep.name == "tiny");
  CHECK(rep.acc_at.size() == 2);
  CHECK(*rep.mrr > 0.0);
  CHECK(*rep.mrr <= 1.0);
  CHECK(r.out.rfind("Model", 0) == 0);

  r = invoke({"gradcheck", "--checkpoint", ws.at("run/epoch-2.cemb"), "--batch", ws.at("triplets.jsonl"),
           "--batch-size", "6", "--pooling", "mean", "--samples", "20"});
  CHECK((r.code == cli::kExitOk || r.code == cli::kExitNumeric));
  CHECK(nlohmann::json::parse(r.out).contains("max_rel_error"));
}

TEST_CASE("config file values are validated") {
  Workspace ws;
  REQUIRE(invoke({"prepare", "--in", ws.at("docs"), "--out", ws.at("c.jsonl")}).code == 0);
  REQUIRE(invoke({"triplets", "--corpus", ws.at("c.jsonl"), "--out", ws.at("t.jsonl"), "--min-distance", "5"}).code == 0);
  std::ofstream(ws.at("bad.json")) << R"({"temperature": 0})";
  auto r = invoke({"train", "--triplets", ws.at("t.jsonl"), "--config", ws.at("bad.json"), "--out-dir", ws.at("o")});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("E_BAD_TEMPERATURE") != std::string::npos);
  std::ofstream(ws.at("unknown.json")) << R"({"temprature": 0.1})";
  r = invoke({"train", "--triplets", ws.at("t.jsonl"), "--config", ws.at("unknown.json"), "--out-dir", ws.at("o")});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("E_BAD_CONFIG") != std::string::npos);
}
