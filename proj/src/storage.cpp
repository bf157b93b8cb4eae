// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "dembed/storage.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "dembed/error.hpp"

namespace dembed::storage {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

std::string dump(const ordered_json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!line.empty()) fn(line, line_no);
    start = end + 1;
  }
}

json parse_line(std::string_view line, std::size_t line_no) {
  auto j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(Errc::invalid_argument, "line " + std::to_string(line_no) + ": not a JSON object");
  }
  return j;
}

std::string get_string(const json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(Errc::invalid_argument,
                "line " + std::to_string(line_no) + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.emplace_back(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace

void write_atomic(const fs::path& path, std::string_view bytes, const AtomicWriteHooks& hooks) {
  const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) {
    throw Error(Errc::io, "parent directory does not exist: " + parent.string());
  }
  fs::path temp = path;
  temp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open " + temp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(temp, ec);
      throw Error(Errc::io, "write failed: " + temp.string());
    }
  }
  try {
    if (hooks.before_rename) hooks.before_rename(temp);
    std::error_code ec;
    fs::rename(temp, path, ec);
    if (ec) throw Error(Errc::io, "rename to " + path.string() + " failed: " + ec.message());
  } catch (...) {
    std::error_code ec;
    fs::remove(temp, ec);
    throw;
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(Errc::io, "read failed: " + path.string());
  return std::move(ss).str();
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::io, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

std::string digest(const fs::path& path) { return sha256_hex(read_file(path)); }

// ---- manifest -------------------------------------------------------------

std::string manifest_to_jsonl(const corpus::CorpusManifest& manifest) {
  std::string out;
  for (const auto& r : manifest.records) {
    ordered_json j;
    j["sent_id"] = r.sent_id;
    j["source_name"] = r.source_name;
    j["text"] = r.text;
    j["char_len"] = r.char_len;
    j["split"] = corpus::split_name(r.split);
    out += dump(j);
    out.push_back('\n');
  }
  return out;
}

corpus::CorpusManifest manifest_from_jsonl(std::string_view text) {
  corpus::CorpusManifest m;
  std::set<std::string> ids;
  for_each_line(text, [&](std::string_view line, std::size_t no) {
    const auto j = parse_line(line, no);
    corpus::SentenceRecord r;
    r.sent_id = get_string(j, "sent_id", no);
    r.source_name = get_string(j, "source_name", no);
    r.text = get_string(j, "text", no);
    r.split = corpus::parse_split(get_string(j, "split", no));
    auto len = j.find("char_len");
    if (len == j.end() || !len->is_number_unsigned()) {
      throw Error(Errc::invalid_argument, "line " + std::to_string(no) + ": bad char_len");
    }
    r.char_len = len->get<std::size_t>();
    if (!ids.insert(r.sent_id).second) {
      throw Error(Errc::invalid_argument, "duplicate sent_id '" + r.sent_id + "'");
    }
    m.records.push_back(std::move(r));
  });
  corpus::recount_sources(m);
  return m;
}

void write_manifest(const fs::path& path, const corpus::CorpusManifest& manifest) {
  write_atomic(path, manifest_to_jsonl(manifest));
}

corpus::CorpusManifest read_manifest(const fs::path& path) {
  return manifest_from_jsonl(read_file(path));
}

// ---- triplets -------------------------------------------------------------

std::string triplets_to_jsonl(std::span<const triplets::Triplet> items) {
  std::string out;
  for (const auto& t : items) {
    ordered_json j;
    j["anchor_id"] = t.anchor_id;
    j["anchor_text"] = t.anchor_text;
    j["positive_text"] = t.positive_text;
    j["negative_id"] = t.negative_id;
    j["negative_text"] = t.negative_text;
    j["split"] = corpus::split_name(t.split);
    out += dump(j);
    out.push_back('\n');
  }
  return out;
}

std::vector<triplets::Triplet> triplets_from_jsonl(std::string_view text) {
  std::vector<triplets::Triplet> out;
  for_each_line(text, [&](std::string_view line, std::size_t no) {
    const auto j = parse_line(line, no);
    triplets::Triplet t;
    t.anchor_id = get_string(j, "anchor_id", no);
    t.anchor_text = get_string(j, "anchor_text", no);
    t.positive_text = get_string(j, "positive_text", no);
    t.negative_id = get_string(j, "negative_id", no);
    t.negative_text = get_string(j, "negative_text", no);
    t.split = corpus::parse_split(get_string(j, "split", no));
    out.push_back(std::move(t));
  });
  return out;
}

void write_triplets(const fs::path& path, std::span<const triplets::Triplet> items) {
  write_atomic(path, triplets_to_jsonl(items));
}

std::vector<triplets::Triplet> read_triplets(const fs::path& path) {
  return triplets_from_jsonl(read_file(path));
}

// ---- raw documents --------------------------------------------------------

std::vector<corpus::RawDocument> documents_from_jsonl(std::string_view text) {
  std::vector<corpus::RawDocument> docs;
  for_each_line(text, [&](std::string_view line, std::size_t no) {
    const auto j = parse_line(line, no);
    docs.push_back({get_string(j, "doc_id", no), get_string(j, "source_name", no),
                    get_string(j, "text", no)});
  });
  return docs;
}

std::vector<corpus::RawDocument> read_documents(const fs::path& input) {
  std::vector<corpus::RawDocument> docs;
  auto add_file = [&](const fs::path& file, const fs::path& root) {
    if (file.extension() == ".jsonl") {
      for (auto& d : documents_from_jsonl(read_file(file))) docs.push_back(std::move(d));
      return;
    }
    const fs::path rel = root.empty() ? file.filename() : fs::relative(file, root);
    const auto first = *rel.begin();
    const std::string source =
        std::distance(rel.begin(), rel.end()) > 1 ? first.string() : rel.stem().string();
    docs.push_back({rel.generic_string(), source, read_file(file)});
  };
  if (fs::is_directory(input)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(input)) {
      const auto ext = entry.path().extension();
      if (entry.is_regular_file() && (ext == ".txt" || ext == ".jsonl")) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) add_file(f, input);
  } else if (fs::is_regular_file(input)) {
    add_file(input, {});
  } else {
    throw Error(Errc::io, "input not found: " + input.string());
  }
  return docs;
}

// ---- binary primitives ----------------------------------------------------

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u16(std::string& out, std::uint16_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_u64(std::string& out, std::uint64_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_f32(std::string& out, float v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

std::string_view ByteReader::take(std::size_t n) {
  if (!has(n)) throw Error(Errc::shape_mismatch, "unexpected end of data");
  auto out = bytes_.substr(pos_, n);
  pos_ += n;
  return out;
}

namespace {
template <class T>
T read_pod(ByteReader& r) {
  T v;
  std::memcpy(&v, r.take(sizeof v).data(), sizeof v);
  return v;
}
}  // namespace

std::uint8_t ByteReader::u8() { return read_pod<std::uint8_t>(*this); }
std::uint16_t ByteReader::u16() { return read_pod<std::uint16_t>(*this); }
std::uint32_t ByteReader::u32() { return read_pod<std::uint32_t>(*this); }
std::uint64_t ByteReader::u64() { return read_pod<std::uint64_t>(*this); }
float ByteReader::f32() { return read_pod<float>(*this); }

// ---- embeddings -----------------------------------------------------------

fs::path ids_path(const fs::path& embeddings_path) {
  fs::path p = embeddings_path;
  p += ".ids";
  return p;
}

std::string serialize_embeddings(const EmbeddingTable& table) {
  if (table.values.size() != table.ids.size() * table.dim) {
    throw Error(Errc::shape_mismatch, "embedding table size does not match ids x dim");
  }
  std::string out = "CEVX";
  put_u32(out, kEmbeddingVersion);
  put_u32(out, static_cast<std::uint32_t>(table.dim));
  put_u64(out, table.ids.size());
  out.append(reinterpret_cast<const char*>(table.values.data()),
             table.values.size() * sizeof(float));
  return out;
}

EmbeddingTable parse_embeddings(std::string_view bytes, std::vector<std::string> ids) {
  ByteReader r(bytes);
  if (!r.has(4) || r.take(4) != "CEVX") throw Error(Errc::bad_magic, "not a CEVX file");
  const auto version = r.u32();
  if (version != kEmbeddingVersion) {
    throw Error(Errc::version_mismatch, "CEVX version " + std::to_string(version));
  }
  EmbeddingTable t;
  t.dim = r.u32();
  const auto count = r.u64();
  if (count != ids.size()) {
    throw Error(Errc::shape_mismatch, "CEVX count " + std::to_string(count) + " but " +
                                          std::to_string(ids.size()) + " ids");
  }
  const std::size_t n = count * t.dim;
  if (r.remaining() != n * sizeof(float)) {
    throw Error(Errc::shape_mismatch, "CEVX payload length does not match count x dim");
  }
  t.values.resize(n);
  std::memcpy(t.values.data(), r.take(n * sizeof(float)).data(), n * sizeof(float));
  t.ids = std::move(ids);
  return t;
}

void write_embeddings(const fs::path& path, const EmbeddingTable& table) {
  std::string ids;
  for (const auto& id : table.ids) {
    if (id.find('\n') != std::string::npos) {
      throw Error(Errc::invalid_argument, "embedding id contains a newline");
    }
    ids += id;
    ids.push_back('\n');
  }
  write_atomic(path, serialize_embeddings(table));
  write_atomic(ids_path(path), ids);
}

EmbeddingTable read_embeddings(const fs::path& path) {
  std::vector<std::string> ids;
  for_each_line(read_file(ids_path(path)),
                [&](std::string_view line, std::size_t) { ids.emplace_back(line); });
  return parse_embeddings(read_file(path), std::move(ids));
}

// ---- TSV ------------------------------------------------------------------

std::vector<std::pair<std::string, std::string>> read_pairs_tsv(const fs::path& path) {
  std::vector<std::pair<std::string, std::string>> out;
  for_each_line(read_file(path), [&](std::string_view line, std::size_t no) {
    auto cols = split_tabs(line);
    if (cols.size() != 2) {
      throw Error(Errc::invalid_argument, path.string() + ":" + std::to_string(no) +
                                              ": expected 2 tab-separated columns");
    }
    out.emplace_back(std::move(cols[0]), std::move(cols[1]));
  });
  return out;
}

std::vector<Qrel> read_qrels_tsv(const fs::path& path) {
  std::vector<Qrel> out;
  for_each_line(read_file(path), [&](std::string_view line, std::size_t no) {
    auto cols = split_tabs(line);
    int grade = -1;
    if (cols.size() == 3) {
      try {
        std::size_t used = 0;
        grade = std::stoi(cols[2], &used);
        if (used != cols[2].size()) grade = -1;
      } catch (const std::exception&) {
        grade = -1;
      }
    }
    if (grade < 0) {
      throw Error(Errc::invalid_argument, path.string() + ":" + std::to_string(no) +
                                              ": expected query_id, cand_id, grade >= 0");
    }
    out.push_back({std::move(cols[0]), std::move(cols[1]), grade});
  });
  return out;
}

std::vector<StsRow> read_sts_tsv(const fs::path& path) {
  std::vector<StsRow> out;
  for_each_line(read_file(path), [&](std::string_view line, std::size_t no) {
    auto cols = split_tabs(line);
    bool ok = cols.size() == 3;
    double score = 0.0;
    if (ok) {
      try {
        std::size_t used = 0;
        score = std::stod(cols[2], &used);
        ok = used == cols[2].size();
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (!ok) {
      throw Error(Errc::invalid_argument, path.string() + ":" + std::to_string(no) +
                                              ": expected id_a, id_b, score");
    }
    out.push_back({std::move(cols[0]), std::move(cols[1]), score});
  });
  return out;
}

void write_pairs_tsv(const fs::path& path,
                     std::span<const std::pair<std::string, std::string>> pairs) {
  std::string out;
  for (const auto& [a, b] : pairs) {
    out += a;
    out.push_back('\t');
    out += b;
    out.push_back('\n');
  }
  write_atomic(path, out);
}

}  // namespace dembed::storage
