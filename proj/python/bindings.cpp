// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "dembed/cli.hpp"
#include "dembed/corpus.hpp"
#include "dembed/encoder.hpp"
#include "dembed/error.hpp"
#include "dembed/eval.hpp"
#include "dembed/storage.hpp"
#include "dembed/trainer.hpp"
#include "dembed/triplets.hpp"

namespace py = pybind11;
using namespace dembed;

namespace {

using Matrix = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<std::vector<double>> rows_of(const Matrix& m) {
  if (m.ndim() != 2) throw py::value_error("expected a 2-D array");
  const auto r = m.unchecked<2>();
  std::vector<std::vector<double>> out(r.shape(0), std::vector<double>(r.shape(1)));
  for (py::ssize_t i = 0; i < r.shape(0); ++i) {
    for (py::ssize_t j = 0; j < r.shape(1); ++j) out[i][j] = r(i, j);
  }
  return out;
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows, std::size_t cols) {
  Matrix m({rows.size(), cols});
  auto w = m.mutable_unchecked<2>();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) w(i, j) = rows[i][j];
  }
  return m;
}

py::dict record_dict(const corpus::SentenceRecord& r) {
  py::dict d;
  d["sent_id"] = r.sent_id;
  d["source_name"] = r.source_name;
  d["text"] = r.text;
  d["char_len"] = r.char_len;
  d["split"] = std::string(corpus::split_name(r.split));
  return d;
}

}  // namespace

PYBIND11_MODULE(_dembed, m) {
  m.doc() = "Contrastive sentence-embedding toolkit";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&] { return py::exception<Error>(m, "DembedError", PyExc_RuntimeError); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const auto& type = error_type.get_stored();
      py::object value = type(e.what());
      value.attr("code") = std::string(errc_name(e.code()));
      py::set_error(type, value);
    }
  });

  // Corpus.
  m.def("clean_text", [](const std::string& s) { return corpus::clean_text(s); });
  m.def("segment_sentences", [](const std::string& s) { return corpus::segment_sentences(s); });
  m.def("filter_short", &corpus::filter_short, py::arg("sentences"), py::arg("min_chars") = 20);
  m.def("dedup_key", [](const std::string& s) { return corpus::dedup_key(s); });
  m.def(
      "prepare_corpus",
      [](const std::vector<std::tuple<std::string, std::string, std::string>>& docs,
         std::size_t min_chars, double train_frac, double test_frac, std::uint64_t seed,
         unsigned threads) {
        std::vector<corpus::RawDocument> raw;
        for (const auto& [id, source, text] : docs) raw.push_back({id, source, text});
        const auto manifest =
            corpus::prepare_corpus(raw, {min_chars, train_frac, test_frac, seed, threads});
        py::list out;
        for (const auto& r : manifest.records) out.append(record_dict(r));
        return out;
      },
      py::arg("documents"), py::arg("min_chars") = 20, py::arg("train_frac") = 0.9,
      py::arg("test_frac") = 0.0, py::arg("seed") = 0, py::arg("threads") = 1,
      "documents: iterable of (doc_id, source_name, text); returns manifest records as dicts.");

  // Triplets.
  m.def("fallback_paraphrase", [](const std::string& text) {
    triplets::FallbackParaphraser p;
    return p.paraphrase({text}).paraphrase;
  });

  // Encoder.
  m.def(
      "tokenize",
      [](const std::string& text, std::size_t vocab_size) {
        return encoder::Tokenizer(vocab_size).tokenize(text);
      },
      py::arg("text"), py::arg("vocab_size") = encoder::kDefaultVocabSize);

  py::class_<encoder::EncoderParams>(m, "Encoder")
      .def(py::init([](std::size_t vocab_size, std::size_t d_emb, std::size_t d_hid,
                       std::size_t d_out, std::size_t lora_rank, double lora_alpha,
                       double lora_dropout, std::uint64_t seed) {
             return encoder::init_params(
                 {vocab_size, d_emb, d_hid, d_out, lora_rank, lora_alpha, lora_dropout}, seed);
           }),
           py::arg("vocab_size") = encoder::kDefaultVocabSize, py::arg("d_emb") = 64,
           py::arg("d_hid") = 128, py::arg("d_out") = 64, py::arg("lora_rank") = 16,
           py::arg("lora_alpha") = 32.0, py::arg("lora_dropout") = 0.05, py::arg("seed") = 0)
      .def_static("load", [](const std::filesystem::path& p) { return encoder::load_checkpoint(p); })
      .def("save", [](const encoder::EncoderParams& p,
                      const std::filesystem::path& path) { encoder::save_checkpoint(p, path); })
      .def_property_readonly("d_out", &encoder::EncoderParams::d_out)
      .def_property_readonly("vocab_size", &encoder::EncoderParams::vocab_size)
      .def_property_readonly("lora_scale", &encoder::EncoderParams::lora_scale)
      .def(
          "tensor",
          [](const encoder::EncoderParams& p, const std::string& name) {
            const Tensor* t = p.find(name);
            if (!t) throw py::key_error(name);
            py::array_t<double> a(t->shape);
            std::copy(t->data.begin(), t->data.end(), a.mutable_data());
            return a;
          },
          py::arg("name"))
      .def(
          "set_tensor",
          [](encoder::EncoderParams& p, const std::string& name, const Matrix& values) {
            Tensor* t = p.find(name);
            if (!t) throw py::key_error(name);
            if (static_cast<std::size_t>(values.size()) != t->size()) {
              throw py::value_error("size mismatch for " + name);
            }
            std::copy(values.data(), values.data() + values.size(), t->data.begin());
          },
          py::arg("name"), py::arg("values"))
      .def(
          "encode",
          [](const encoder::EncoderParams& p, const std::vector<std::string>& texts,
             const std::string& pooling, unsigned threads) {
            encoder::EncodeOptions opts;
            opts.pooling = encoder::parse_pooling(pooling);
            opts.threads = threads;
            std::vector<encoder::Embedding> out;
            {
              py::gil_scoped_release release;
              out = encoder::encode_batch(texts, p, encoder::Tokenizer(p.vocab_size()), opts);
            }
            return to_matrix(out, p.d_out());
          },
          py::arg("texts"), py::arg("pooling") = "last_token", py::arg("threads") = 1);

  m.def("cosine_similarity", [](const std::vector<double>& u, const std::vector<double>& v) {
    return encoder::cosine_similarity(u, v);
  });

  // Training.
  m.def(
      "infonce_loss",
      [](const Matrix& a, const Matrix& p, const Matrix& n, double tau, bool in_batch) {
        const auto ra = rows_of(a), rp = rows_of(p), rn = rows_of(n);
        return train::infonce_loss(ra, rp, rn, tau, in_batch);
      },
      py::arg("anchors"), py::arg("positives"), py::arg("negatives"), py::arg("tau") = 0.05,
      py::arg("in_batch_negatives") = true);
  m.def(
      "lr_at_step",
      [](std::size_t step, std::size_t total, double peak_lr, double warmup_frac, double min_lr) {
        train::TrainConfig c;
        c.peak_lr = peak_lr;
        c.warmup_frac = warmup_frac;
        c.min_lr = min_lr;
        return train::lr_at_step(step, total, c);
      },
      py::arg("step"), py::arg("total_steps"), py::arg("peak_lr") = 2e-4,
      py::arg("warmup_frac") = 0.1, py::arg("min_lr") = 0.0);

  // Metrics.
  m.def("accuracy_at_k", [](const std::vector<std::size_t>& ranks, std::size_t k) {
    return eval::accuracy_at_k(ranks, k);
  });
  m.def("mean_reciprocal_rank", [](const std::vector<std::size_t>& ranks) {
    return eval::mean_reciprocal_rank(ranks);
  });
  m.def(
      "gold_ranks",
      [](const Matrix& queries, const Matrix& candidates, const std::vector<std::size_t>& gold) {
        const auto q = rows_of(queries), c = rows_of(candidates);
        if (gold.size() != q.size()) throw py::value_error("one gold index per query");
        eval::RetrievalTask t;
        for (std::size_t i = 0; i < c.size(); ++i) {
          t.candidates.push_back({std::to_string(1000000000 + i), c[i]});
        }
        for (std::size_t i = 0; i < q.size(); ++i) {
          if (gold[i] >= c.size()) throw py::index_error("gold index out of range");
          t.queries.push_back({std::to_string(i), q[i]});
          t.gold[std::to_string(i)] = t.candidates[gold[i]].id;
        }
        return eval::gold_ranks(t);
      },
      py::arg("queries"), py::arg("candidates"), py::arg("gold"),
      "1-based rank of candidates[gold[i]] for each query; ties go to the lower index.");
  m.def(
      "ndcg_at_k",
      [](const std::map<std::string, std::vector<std::string>>& rankings,
         const eval::Qrels& qrels, std::size_t k, const std::string& gain) {
        std::vector<eval::RankedQuery> r;
        for (const auto& [q, ids] : rankings) r.push_back({q, ids});
        return eval::ndcg_at_k(r, qrels, k, eval::parse_gain(gain)).value;
      },
      py::arg("rankings"), py::arg("qrels"), py::arg("k") = 10, py::arg("gain") = "linear");
  m.def(
      "recall_at_k",
      [](const std::map<std::string, std::vector<std::string>>& rankings,
         const eval::Qrels& qrels, std::size_t k) {
        std::vector<eval::RankedQuery> r;
        for (const auto& [q, ids] : rankings) r.push_back({q, ids});
        return eval::recall_at_k(r, qrels, k).value;
      },
      py::arg("rankings"), py::arg("qrels"), py::arg("k"));
  m.def("spearman_rho", [](const std::vector<double>& predicted, const std::vector<double>& gold) {
    return eval::spearman_rho(predicted, gold);
  });

  // Storage.
  m.def("sha256_hex", [](const py::bytes& b) { return storage::sha256_hex(std::string(b)); });

  // Command line.
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one dembed subcommand; returns (exit_code, stdout, stderr).");
}
