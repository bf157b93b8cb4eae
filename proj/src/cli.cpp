// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "dembed/cli.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dembed/corpus.hpp"
#include "dembed/encoder.hpp"
#include "dembed/error.hpp"
#include "dembed/eval.hpp"
#include "dembed/run_config.hpp"
#include "dembed/storage.hpp"
#include "dembed/trainer.hpp"
#include "dembed/triplets.hpp"
#include "json.hpp"

namespace dembed::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::nonfinite_grad:
      return kExitNumeric;
    case Errc::bad_config:
    case Errc::bad_temperature:
      return kExitUsage;
    default:
      return kExitData;
  }
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Flag values of a subcommand as given (or defaulted), for run metadata.
std::string flags_snapshot(const CLI::App& sub) {
  Json j = Json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help") continue;
    const auto& results = opt->results();
    if (opt->count() > 0) {
      j[names.front()] = results.size() == 1 ? Json(results.front()) : Json(results);
    } else {
      j[names.front()] = opt->get_default_str();
    }
  }
  return j.dump();
}

fs::path sidecar(const fs::path& out, std::string_view suffix) {
  return fs::path(out.string() + std::string(suffix));
}

std::vector<triplets::Triplet> filter_split(const std::vector<triplets::Triplet>& items,
                                            corpus::Split split) {
  std::vector<triplets::Triplet> out;
  for (const auto& t : items) {
    if (t.split == split) out.push_back(t);
  }
  return out;
}

struct PrepareArgs {
  std::string in, out;
  std::size_t min_chars = 20;
  double train_frac = 0.9;
  double test_frac = 0.0;
  std::uint64_t seed = 0;
};

struct TripletArgs {
  std::string corpus, out, provider = "fallback";
  std::size_t min_distance = 500;
  bool cross_source = false;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  run::RunConfig config;
  std::string config_path;
  std::string pooling = "last_token";
};

struct EmbedArgs {
  std::string checkpoint, texts, out, pairs_out, split = "all";
  std::string pooling = "last_token";
};

struct EvalArgs {
  std::string embeddings, pairs, qrels, sts, out, name;
  std::vector<std::size_t> ks{1, 5, 10};
  std::string gain = "linear";
  std::size_t pool_size = 0;
  std::uint64_t seed = 0;
  bool table = false;
};

struct StatsArgs {
  std::string corpus;
  std::size_t vocab_size = encoder::kDefaultVocabSize;
};

struct GradcheckArgs {
  std::string checkpoint, batch;
  double h = 1e-4;
  std::size_t samples = 50;
  std::size_t batch_size = 0;
  double temperature = 0.05;
  std::string pooling = "last_token";
  bool lora_only = false;
  bool eval_mode = false;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
};

int do_prepare(const PrepareArgs& a, unsigned threads, const CLI::App& sub, std::ostream& err) {
  const auto start = Clock::now();
  const auto docs = storage::read_documents(a.in);
  corpus::PrepareOptions opts{a.min_chars, a.train_frac, a.test_frac, a.seed, threads};
  const auto manifest = corpus::prepare_corpus(docs, opts);
  storage::write_manifest(a.out, manifest);

  err << "prepare: " << docs.size() << " documents -> " << manifest.records.size()
      << " sentences\n";
  for (const auto& [source, n] : manifest.per_source_counts) err << "  " << source << ": " << n << "\n";

  std::vector<fs::path> inputs;
  if (fs::is_directory(a.in)) {
    for (const auto& e : fs::recursive_directory_iterator(a.in)) {
      if (e.is_regular_file()) inputs.push_back(e.path());
    }
    std::sort(inputs.begin(), inputs.end());
  } else {
    inputs.push_back(a.in);
  }
  run::RunMetadata meta{"prepare", flags_snapshot(sub), {{"seed", a.seed}},
                        run::artifact_versions(), run::digest_files(inputs),
                        run::digest_files({a.out}), seconds_since(start)};
  run::write_metadata(sidecar(a.out, ".meta.json"), meta);
  return kExitOk;
}

int do_triplets(const TripletArgs& a, const CLI::App& sub, std::ostream& err) {
  const auto start = Clock::now();
  const auto manifest = storage::read_manifest(a.corpus);
  auto provider = triplets::make_provider(a.provider);
  const triplets::NegativePolicy policy{a.min_distance, a.cross_source, a.seed};
  const auto build = triplets::build_triplets(manifest, policy, *provider);
  storage::write_triplets(a.out, build.triplets);

  err << "triplets: " << build.triplets.size() << " written, " << build.skipped_paraphrase
      << " skipped (paraphrase), " << build.skipped_no_negative << " skipped (no negative)\n";
  run::RunMetadata meta{"triplets", flags_snapshot(sub), {{"seed", a.seed}},
                        run::artifact_versions(), run::digest_files({a.corpus}),
                        run::digest_files({a.out}), seconds_since(start)};
  run::write_metadata(sidecar(a.out, ".meta.json"), meta);
  return kExitOk;
}

int do_train(TrainArgs a, const CLI::App& sub, std::ostream& err) {
  const auto start = Clock::now();
  a.config.train.pooling = encoder::parse_pooling(a.pooling);
  if (!a.config_path.empty()) a.config = run::load_config(a.config_path, a.config);
  auto& cfg = a.config;
  if (cfg.triplets.empty()) throw Error(Errc::bad_config, "no triplet file given");
  if (cfg.out_dir.empty()) throw Error(Errc::bad_config, "no output directory given");

  const auto all = storage::read_triplets(cfg.triplets);
  const auto train_items = filter_split(all, corpus::Split::train);
  const auto val_items =
      cfg.val.empty() ? filter_split(all, corpus::Split::val) : storage::read_triplets(cfg.val);
  if (train_items.empty()) {
    throw Error(Errc::no_train_data, "no training triplets in " + cfg.triplets);
  }
  train::validate(cfg.train);

  const fs::path dir = cfg.out_dir;
  fs::create_directories(dir);
  const std::uint64_t init_seed = derive_seed(cfg.train.seed, "init");
  const encoder::Tokenizer tokenizer(cfg.encoder.vocab_size);
  auto initial = encoder::init_params(cfg.encoder, init_seed);

  std::vector<fs::path> outputs;
  const fs::path initial_path = dir / "epoch-0.cemb";
  encoder::save_checkpoint(initial, initial_path);
  outputs.push_back(initial_path);

  std::string log;
  train::TrainCallbacks callbacks;
  callbacks.on_step = [&](const train::StepLog& s) {
    log += Json{{"step", s.step},         {"lr", s.lr},
                {"loss", s.loss},         {"mean_pos_sim", s.mean_pos_sim},
                {"mean_neg_sim", s.mean_neg_sim}, {"grad_norm", s.grad_norm}}
               .dump() +
           "\n";
  };
  callbacks.on_epoch_end = [&](const train::EpochReport& r, const encoder::EncoderParams& p) {
    const fs::path path = dir / ("epoch-" + std::to_string(r.epoch) + ".cemb");
    encoder::save_checkpoint(p, path);
    outputs.push_back(path);
    err << "epoch " << r.epoch << ": train_loss " << r.train_loss;
    if (r.val_loss) err << ", val_loss " << *r.val_loss;
    err << "\n";
  };

  const auto result = train::train(train_items, val_items, std::move(initial), cfg.train,
                                   tokenizer, callbacks);

  storage::write_atomic(dir / "train_log.jsonl", log);
  outputs.push_back(dir / "train_log.jsonl");
  Json report;
  report["train_triplets"] = train_items.size();
  report["val_triplets"] = val_items.size();
  report["steps"] = result.state.step;
  report["initial_val_loss"] = result.initial_val_loss ? Json(*result.initial_val_loss) : Json();
  Json epochs = Json::array();
  for (const auto& e : result.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"steps", e.steps},
                      {"train_loss", e.train_loss},
                      {"val_loss", e.val_loss ? Json(*e.val_loss) : Json()}});
  }
  report["epochs"] = epochs;
  storage::write_atomic(dir / "train_report.json", report.dump(2) + "\n");
  outputs.push_back(dir / "train_report.json");

  std::vector<fs::path> inputs{cfg.triplets};
  if (!cfg.val.empty()) inputs.push_back(cfg.val);
  if (!a.config_path.empty()) inputs.push_back(a.config_path);
  Json snapshot = Json::parse(run::config_to_json(cfg));
  snapshot["flags"] = Json::parse(flags_snapshot(sub));
  run::RunMetadata meta{"train",
                        snapshot.dump(),
                        {{"seed", cfg.train.seed}, {"init", init_seed}},
                        run::artifact_versions(),
                        run::digest_files(inputs),
                        run::digest_files(outputs),
                        seconds_since(start)};
  run::write_metadata(dir / "run_metadata.json", meta);
  return kExitOk;
}

int do_embed(const EmbedArgs& a, unsigned threads, const CLI::App& sub, std::ostream& err) {
  const auto start = Clock::now();
  const auto params = encoder::load_checkpoint(a.checkpoint);
  const encoder::Tokenizer tokenizer(params.vocab_size());

  std::vector<std::string> ids, texts;
  std::vector<std::pair<std::string, std::string>> pairs;
  if (fs::path(a.texts).extension() == ".jsonl") {
    for (const auto& t : storage::read_triplets(a.texts)) {
      if (a.split != "all" && t.split != corpus::parse_split(a.split)) continue;
      ids.push_back(t.anchor_id);
      texts.push_back(t.anchor_text);
      ids.push_back(t.anchor_id + "#pos");
      texts.push_back(t.positive_text);
      pairs.emplace_back(t.anchor_id, t.anchor_id + "#pos");
    }
  } else {
    for (auto& [id, text] : storage::read_pairs_tsv(a.texts)) {
      ids.push_back(std::move(id));
      texts.push_back(std::move(text));
    }
  }

  encoder::EncodeOptions opts;
  opts.pooling = encoder::parse_pooling(a.pooling);
  opts.threads = threads;
  const auto vectors = encoder::encode_batch(texts, params, tokenizer, opts);
  storage::EmbeddingTable table;
  table.ids = ids;
  table.dim = params.d_out();
  table.values.reserve(ids.size() * table.dim);
  for (const auto& v : vectors) {
    for (double x : v) table.values.push_back(static_cast<float>(x));
  }
  storage::write_embeddings(a.out, table);
  std::vector<fs::path> outputs{a.out, storage::ids_path(a.out)};
  if (!a.pairs_out.empty()) {
    storage::write_pairs_tsv(a.pairs_out, pairs);
    outputs.emplace_back(a.pairs_out);
  }
  err << "embed: " << ids.size() << " texts, dim " << table.dim << "\n";
  run::RunMetadata meta{"embed", flags_snapshot(sub), {}, run::artifact_versions(),
                        run::digest_files({a.checkpoint, a.texts}), run::digest_files(outputs),
                        seconds_since(start)};
  run::write_metadata(sidecar(a.out, ".meta.json"), meta);
  return kExitOk;
}

int do_eval(const EvalArgs& a, unsigned threads, const CLI::App& sub, std::ostream& out) {
  const auto start = Clock::now();
  const auto table = storage::read_embeddings(a.embeddings);
  eval::EvalOptions opts;
  opts.ks = a.ks;
  opts.gain = eval::parse_gain(a.gain);
  opts.pool = {a.pool_size, a.seed, threads};

  eval::MetricReport report;
  fs::path task_file;
  if (!a.pairs.empty()) {
    task_file = a.pairs;
    report = eval::evaluate(eval::retrieval_task(table, storage::read_pairs_tsv(a.pairs)), opts);
  } else if (!a.qrels.empty()) {
    task_file = a.qrels;
    report = eval::evaluate(eval::graded_task(table, storage::read_qrels_tsv(a.qrels)), opts);
  } else {
    task_file = a.sts;
    report = eval::evaluate(eval::sts_task(table, storage::read_sts_tsv(a.sts)), opts);
  }
  report.name = a.name.empty() ? fs::path(a.embeddings).stem().string() : a.name;

  const std::string json = eval::report_to_json(report);
  if (a.out.empty()) {
    out << json;
  } else {
    storage::write_atomic(a.out, json);
    run::RunMetadata meta{"eval", flags_snapshot(sub), {{"seed", a.seed}},
                          run::artifact_versions(), run::digest_files({a.embeddings, task_file}),
                          run::digest_files({a.out}), seconds_since(start)};
    run::write_metadata(sidecar(a.out, ".meta.json"), meta);
  }
  if (a.table) out << eval::report_tables({&report, 1});
  return kExitOk;
}

int do_stats(const StatsArgs& a, std::ostream& out) {
  const auto manifest = storage::read_manifest(a.corpus);
  const auto s = corpus::corpus_stats(manifest, encoder::Tokenizer(a.vocab_size));
  Json j{{"sentence_count", s.sentence_count},       {"word_count", s.word_count},
         {"unique_term_count", s.unique_term_count}, {"token_count", s.token_count},
         {"mean_len_tokens", s.mean_len_tokens},     {"sd_len_tokens", s.sd_len_tokens}};
  Json per_source = Json::object();
  for (const auto& [source, n] : manifest.per_source_counts) per_source[source] = n;
  j["per_source"] = per_source;
  Json per_split = Json::object();
  for (const auto& r : manifest.records) {
    auto key = std::string(corpus::split_name(r.split));
    per_split[key] = per_split.value(key, 0) + 1;
  }
  j["per_split"] = per_split;
  out << j.dump(2) << "\n";
  return kExitOk;
}

int do_gradcheck(const GradcheckArgs& a, unsigned threads, std::ostream& out) {
  const auto params = encoder::load_checkpoint(a.checkpoint);
  const encoder::Tokenizer tokenizer(params.vocab_size());
  auto batch = storage::read_triplets(a.batch);
  if (a.batch_size > 0 && batch.size() > a.batch_size) batch.resize(a.batch_size);
  if (batch.empty()) throw Error(Errc::empty_batch, "no triplets in " + a.batch);

  train::TrainConfig cfg;
  cfg.temperature = a.temperature;
  cfg.pooling = encoder::parse_pooling(a.pooling);
  cfg.train_lora_only = a.lora_only;
  cfg.threads = threads;
  train::GradCheckOptions opts;
  opts.h = a.h;
  opts.samples = a.samples;
  opts.seed = a.seed;
  opts.train_mode = !a.eval_mode;
  const auto r = train::gradient_check(params, batch, cfg, tokenizer, opts);
  const bool pass = r.max_rel_error <= a.tolerance;
  out << Json{{"max_rel_error", r.max_rel_error},
              {"worst_tensor", r.worst_tensor},
              {"coordinates", r.coordinates},
              {"tolerance", a.tolerance},
              {"pass", pass}}
             .dump(2)
      << "\n";
  return pass ? kExitOk : kExitNumeric;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"dembed: contrastive sentence-embedding pipeline", "dembed"};
  app.require_subcommand(1, 1);
  app.option_defaults()->always_capture_default();
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", DEMBED_VERSION);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads (results do not depend on this)")
      ->check(CLI::Range(1u, 1024u));

  PrepareArgs pa;
  auto* prepare = app.add_subcommand("prepare", "Clean, segment, deduplicate and split documents");
  prepare->add_option("--in", pa.in, "Input directory or file (.txt, .jsonl)")->required();
  prepare->add_option("--out", pa.out, "Output manifest (JSONL)")->required();
  prepare->add_option("--min-chars", pa.min_chars, "Minimum sentence length in characters");
  prepare->add_option("--train-frac", pa.train_frac, "Training fraction per source")
      ->check(CLI::Range(0.0, 1.0));
  prepare->add_option("--test-frac", pa.test_frac, "Test fraction per source (taken after train)")
      ->check(CLI::Range(0.0, 1.0));
  prepare->add_option("--seed", pa.seed, "Split seed");

  TripletArgs ta;
  auto* trip = app.add_subcommand("triplets", "Build anchor/positive/negative triplets");
  trip->add_option("--corpus", ta.corpus, "Split manifest (JSONL)")->required();
  trip->add_option("--out", ta.out, "Output triplet file (JSONL)")->required();
  trip->add_option("--min-distance", ta.min_distance, "Minimum index distance for negatives");
  trip->add_flag("--cross-source", ta.cross_source, "Draw negatives from other sources");
  trip->add_option("--provider", ta.provider,
                   "Paraphrase provider: 'fallback' or a command speaking the line protocol");
  trip->add_option("--seed", ta.seed, "Negative sampling seed");

  TrainArgs tr;
  auto& rc = tr.config;
  auto* train_cmd = app.add_subcommand("train", "Contrastive fine-tuning with InfoNCE");
  train_cmd->add_option("--triplets", rc.triplets, "Triplet file; split=train rows are trained on");
  train_cmd->add_option("--val", rc.val, "Validation triplets (default: split=val rows)");
  train_cmd->add_option("--config", tr.config_path, "JSON run config; its keys override flags");
  train_cmd->add_option("--out-dir", rc.out_dir, "Directory for checkpoints and logs");
  train_cmd->add_option("--seed", rc.train.seed, "Seed for init, shuffling and dropout");
  train_cmd->add_flag("--lora-only", rc.train.train_lora_only, "Train only the LoRA adapters");
  train_cmd->add_option("--epochs", rc.train.epochs, "Epochs");
  train_cmd->add_option("--batch-size", rc.train.batch_size, "Triplets per batch");
  train_cmd->add_option("--lr", rc.train.peak_lr, "Peak learning rate");
  train_cmd->add_option("--warmup", rc.train.warmup_frac, "Warmup fraction of total steps");
  train_cmd->add_option("--min-lr", rc.train.min_lr, "Final learning rate");
  train_cmd->add_option("--temperature", rc.train.temperature, "InfoNCE temperature");
  train_cmd->add_option("--weight-decay", rc.train.weight_decay, "AdamW weight decay");
  train_cmd->add_option("--lora-rank", rc.encoder.lora_rank, "LoRA rank r");
  train_cmd->add_option("--lora-alpha", rc.encoder.lora_alpha, "LoRA alpha");
  train_cmd->add_option("--lora-dropout", rc.encoder.lora_dropout, "LoRA input dropout");
  train_cmd->add_option("--pooling", tr.pooling, "Pooling: last_token or mean")
      ->check(CLI::IsMember({"last_token", "mean"}));
  train_cmd->add_option("--vocab-size", rc.encoder.vocab_size, "Hashed vocabulary size");
  train_cmd->add_option("--d-emb", rc.encoder.d_emb, "Token embedding width");
  train_cmd->add_option("--d-hid", rc.encoder.d_hid, "Hidden width");
  train_cmd->add_option("--d-out", rc.encoder.d_out, "Output embedding width");

  EmbedArgs ea;
  auto* embed = app.add_subcommand("embed", "Encode texts with a checkpoint");
  embed->add_option("--checkpoint", ea.checkpoint, "CEMB checkpoint")->required();
  embed->add_option("--texts", ea.texts, "Texts: 'id<TAB>text' TSV or triplet JSONL")->required();
  embed->add_option("--out", ea.out, "Output CEVX embeddings (ids go to <out>.ids)")->required();
  embed->add_option("--pooling", ea.pooling, "Pooling: last_token or mean")
      ->check(CLI::IsMember({"last_token", "mean"}));
  embed->add_option("--split", ea.split, "Triplet split to embed: all, train, val or test")
      ->check(CLI::IsMember({"all", "train", "val", "test"}));
  embed->add_option("--pairs-out", ea.pairs_out,
                    "For triplet input: write anchor/positive id pairs (TSV)");

  EvalArgs va;
  auto* eval_cmd = app.add_subcommand("eval", "Score embeddings on a retrieval, graded or STS task");
  eval_cmd->add_option("--embeddings", va.embeddings, "CEVX embeddings")->required();
  auto* pairs_opt = eval_cmd->add_option("--pairs", va.pairs, "Gold pairs TSV (query, candidate)");
  auto* qrels_opt = eval_cmd->add_option("--qrels", va.qrels, "Qrels TSV (query, candidate, grade)");
  auto* sts_opt = eval_cmd->add_option("--sts", va.sts, "STS TSV (id_a, id_b, score)");
  pairs_opt->excludes(qrels_opt)->excludes(sts_opt);
  qrels_opt->excludes(sts_opt);
  eval_cmd->add_option("--k", va.ks, "Cutoffs for Acc@K / Recall@K")->delimiter(',');
  eval_cmd->add_option("--gain", va.gain, "NDCG gain: linear or exp")
      ->check(CLI::IsMember({"linear", "exp"}));
  eval_cmd->add_option("--pool-size", va.pool_size, "Candidates per query (0 = all)");
  eval_cmd->add_option("--seed", va.seed, "Seed for sampled pools");
  eval_cmd->add_option("--out", va.out, "Write the JSON report here instead of stdout");
  eval_cmd->add_option("--name", va.name, "Model name in the report (default: embeddings stem)");
  eval_cmd->add_flag("--table", va.table, "Also print the plain-text table");

  StatsArgs sa;
  auto* stats = app.add_subcommand("stats", "Corpus statistics of a manifest");
  stats->add_option("--corpus", sa.corpus, "Manifest (JSONL)")->required();
  stats->add_option("--vocab-size", sa.vocab_size, "Hashed vocabulary size for token counts");

  GradcheckArgs ga;
  auto* grad = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  grad->set_help_flag("--help", "Print this help message and exit");
  grad->add_option("--checkpoint", ga.checkpoint, "CEMB checkpoint")->required();
  grad->add_option("--batch", ga.batch, "Triplet JSONL forming the batch")->required();
  grad->add_option("--h", ga.h, "Central-difference step");
  grad->add_option("--samples", ga.samples, "Coordinates to check");
  grad->add_option("--batch-size", ga.batch_size, "Use only the first N triplets (0 = all)");
  grad->add_option("--temperature", ga.temperature, "InfoNCE temperature");
  grad->add_option("--pooling", ga.pooling, "Pooling: last_token or mean")
      ->check(CLI::IsMember({"last_token", "mean"}));
  grad->add_flag("--lora-only", ga.lora_only, "Check adapter gradients only");
  grad->add_flag("--eval-mode", ga.eval_mode, "Disable dropout");
  grad->add_option("--tolerance", ga.tolerance, "Maximum accepted relative error");
  grad->add_option("--seed", ga.seed, "Seed for dropout and coordinate sampling");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  std::vector<std::string> storage_args{"dembed"};
  storage_args.insert(storage_args.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage_args) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (eval_cmd->parsed() && va.pairs.empty() && va.qrels.empty() && va.sts.empty()) {
      throw CLI::RequiredError("one of --pairs, --qrels or --sts");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (prepare->parsed()) return do_prepare(pa, threads, *prepare, err);
    if (trip->parsed()) return do_triplets(ta, *trip, err);
    if (train_cmd->parsed()) {
      tr.config.train.threads = threads;
      return do_train(tr, *train_cmd, err);
    }
    if (embed->parsed()) return do_embed(ea, threads, *embed, err);
    if (eval_cmd->parsed()) return do_eval(va, threads, *eval_cmd, out);
    if (stats->parsed()) return do_stats(sa, out);
    if (grad->parsed()) return do_gradcheck(ga, threads, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: E_IO: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace dembed::cli
