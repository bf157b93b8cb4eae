// Copyright 2026 The dembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "dembed/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

#include "dembed/error.hpp"
#include "dembed/parallel.hpp"
#include "dembed/rng.hpp"

namespace dembed::corpus {

namespace {

constexpr std::array<std::string_view, 7> kAbbreviations = {
    "Fig.", "e.g.", "i.e.", "Dr.", "et al.", "vs.", "No.",
};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || is_upper(c); }
char ascii_lower(char c) { return is_upper(c) ? static_cast<char>(c - 'A' + 'a') : c; }

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == '\n') {
      lines.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return lines;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

// "<tag ...>", "</tag>", "<!-- -->", "<|ref|>": '<' followed by a letter,
// '/', '!' or '|', up to the next '>'. Replaced by a space.
bool is_block_tag(std::string_view name) {
  static constexpr std::array<std::string_view, 27> kBlock = {
      "address", "article", "blockquote", "br", "dd", "div",     "dl",    "dt", "footer",
      "h1",      "h2",      "h3",         "h4", "h5", "h6",      "header", "hr", "li",
      "ol",      "p",       "pre",        "section", "table", "td", "th",  "tr", "ul",
  };
  std::string lower(name);
  for (auto& c : lower) c = ascii_lower(c);
  return std::find(kBlock.begin(), kBlock.end(), lower) != kBlock.end();
}

// Block-level tags become a space so adjacent words stay apart; inline tags
// vanish so "<i>word</i>." keeps its punctuation attached.
std::string strip_tags(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '<' && i + 1 < s.size() &&
        (is_alpha(s[i + 1]) || s[i + 1] == '/' || s[i + 1] == '!' || s[i + 1] == '|')) {
      const auto close = s.find('>', i + 1);
      if (close != std::string_view::npos) {
        std::size_t b = i + 1 + (s[i + 1] == '/');
        std::size_t e = b;
        while (e < close && (is_alpha(s[e]) || is_digit(s[e]))) ++e;
        if (is_block_tag(s.substr(b, e - b))) out.push_back(' ');
        i = close + 1;
        continue;
      }
    }
    out.push_back(s[i++]);
  }
  return out;
}

bool is_rule_line(std::string_view line) {
  line = trim(line);
  if (line.size() < 3) return false;
  const char c = line[0];
  if (c != '-' && c != '*' && c != '_' && c != '=') return false;
  return std::all_of(line.begin(), line.end(), [c](char x) { return x == c || x == ' '; });
}

std::string_view strip_line_markers(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  std::size_t j = i;
  while (j < line.size() && line[j] == '#') ++j;
  if (j > i && j - i <= 6 && (j == line.size() || line[j] == ' ')) return line.substr(j);
  if (i < line.size() && line[i] == '>') return line.substr(i + 1);
  if (i + 1 < line.size() && (line[i] == '-' || line[i] == '+' || line[i] == '*') &&
      line[i + 1] == ' ') {
    return line.substr(i + 2);
  }
  return line;
}

// Images are dropped, links keep their text, emphasis and code markers go.
std::string strip_inline_markdown(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const bool image = s[i] == '!' && i + 1 < s.size() && s[i + 1] == '[';
    if (s[i] == '[' || image) {
      const std::size_t open = image ? i + 1 : i;
      const auto close = s.find(']', open + 1);
      if (close != std::string_view::npos && close + 1 < s.size() && s[close + 1] == '(') {
        const auto paren = s.find(')', close + 2);
        const auto nl = s.find('\n', open);
        if (paren != std::string_view::npos && (nl == std::string_view::npos || nl > paren)) {
          if (!image) out.append(s.substr(open + 1, close - open - 1));
          i = paren + 1;
          continue;
        }
      }
    }
    if ((s[i] == '_' || s[i] == '~') && i + 1 < s.size() && s[i + 1] == s[i]) {
      i += 2;
      continue;
    }
    if (s[i] == '*' || s[i] == '`') {
      ++i;
      continue;
    }
    out.push_back(s[i++]);
  }
  return out;
}

std::string strip_markdown(std::string_view s) {
  std::vector<std::string> kept;
  for (auto line : split_lines(s)) {
    if (is_rule_line(line)) continue;
    kept.emplace_back(strip_line_markers(line));
  }
  return strip_inline_markdown(join_lines(kept));
}

// Bracketed numeric citations: [12], [1, 4], [3-5], [7–9], plus empty
// leftovers such as "[]" from nested boxes.
std::string strip_citations(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '[') {
      std::size_t j = i + 1;
      bool ok = true;
      bool digits = false;
      while (j < s.size() && s[j] != ']') {
        const char c = s[j];
        digits |= is_digit(c);
        if (is_digit(c) || c == ',' || c == ';' || c == '-' || c == ' ') {
          ++j;
        } else if (s.compare(j, 3, "\xE2\x80\x93") == 0) {
          j += 3;
        } else {
          ok = false;
          break;
        }
      }
      if (ok && digits && j < s.size()) {
        i = j + 1;
        if (i < s.size() && std::string_view(".,;:!?)").find(s[i]) != std::string_view::npos) {
          while (!out.empty() && (out.back() == ' ' || out.back() == '\t')) out.pop_back();
        }
        continue;
      }
    }
    out.push_back(s[i++]);
  }
  return out;
}

bool is_page_number_line(std::string_view line) {
  line = trim(line);
  if (line.empty()) return false;
  std::string lower(line);
  for (auto& c : lower) c = ascii_lower(c);
  std::string_view rest = lower;
  if (rest.starts_with("page")) {
    rest = trim(rest.substr(4));
  } else if (rest.starts_with("p.")) {
    rest = trim(rest.substr(2));
  }
  return !rest.empty() && rest.size() <= 4 && std::all_of(rest.begin(), rest.end(), is_digit);
}

std::string strip_page_number_lines(std::string_view s) {
  std::vector<std::string> kept;
  for (auto line : split_lines(s)) {
    if (!is_page_number_line(line)) kept.emplace_back(line);
  }
  return join_lines(kept);
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = true;
      continue;
    }
    if (pending && !out.empty()) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

std::string clean_once(std::string_view raw) {
  auto s = strip_tags(raw);
  s = strip_markdown(s);
  s = strip_citations(s);
  s = strip_page_number_lines(s);
  return collapse_whitespace(s);
}

std::string_view strip_open_punct(std::string_view word) {
  while (!word.empty() && (word.front() == '(' || word.front() == '[' || word.front() == '"' ||
                           word.front() == '\'')) {
    word.remove_prefix(1);
  }
  return word;
}

// True when the '.' at `dot` closes an exempt abbreviation.
bool is_abbreviation(std::string_view text, std::size_t dot) {
  std::size_t start = dot;
  while (start > 0 && !is_space(text[start - 1])) --start;
  const auto word = strip_open_punct(text.substr(start, dot - start + 1));
  if (word.size() == 2 && is_upper(word[0])) return true;
  if (word == "al.") {
    std::size_t e = start;
    while (e > 0 && is_space(text[e - 1])) --e;
    std::size_t b = e;
    while (b > 0 && !is_space(text[b - 1])) --b;
    return strip_open_punct(text.substr(b, e - b)) == "et";
  }
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

void segment_paragraph(std::string_view para, std::vector<std::string>& out) {
  std::size_t start = 0;
  for (std::size_t i = 0; i < para.size(); ++i) {
    const char c = para[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 1 >= para.size() || !is_space(para[i + 1])) continue;
    std::size_t j = i + 1;
    while (j < para.size() && is_space(para[j])) ++j;
    if (j >= para.size() || !(is_upper(para[j]) || is_digit(para[j]))) continue;
    if (c == '.' && is_abbreviation(para, i)) continue;
    const auto sentence = trim(para.substr(start, i + 1 - start));
    if (!sentence.empty()) out.emplace_back(sentence);
    start = i + 1;
  }
  const auto tail = trim(para.substr(std::min(start, para.size())));
  if (!tail.empty()) out.emplace_back(tail);
}

std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

}  // namespace

std::string_view split_name(Split split) noexcept {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
  }
  return "unassigned";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  if (name == "unassigned") return Split::unassigned;
  throw Error(Errc::invalid_argument, "unknown split '" + std::string(name) + "'");
}

std::span<const std::string_view> abbreviation_list() noexcept { return kAbbreviations; }

std::size_t utf8_length(std::string_view text) noexcept {
  return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

std::string clean_text(std::string_view raw) {
  std::string current = clean_once(raw);
  while (true) {
    std::string next = clean_once(current);
    if (next == current) return current;
    current = std::move(next);
  }
}

std::vector<std::string> split_paragraphs(std::string_view text) {
  std::vector<std::string> paragraphs;
  std::string current;
  for (auto line : split_lines(text)) {
    if (trim(line).empty()) {
      if (!trim(current).empty()) paragraphs.push_back(std::move(current));
      current.clear();
      continue;
    }
    if (!current.empty()) current.push_back('\n');
    current.append(line);
  }
  if (!trim(current).empty()) paragraphs.push_back(std::move(current));
  return paragraphs;
}

std::vector<std::string> segment_sentences(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& para : split_paragraphs(text)) segment_paragraph(para, out);
  return out;
}

std::vector<std::string> filter_short(std::vector<std::string> sentences, std::size_t min_chars) {
  std::erase_if(sentences, [min_chars](const std::string& s) { return utf8_length(s) < min_chars; });
  return sentences;
}

std::string dedup_key(std::string_view text) {
  std::string key = collapse_whitespace(text);
  for (auto& c : key) c = ascii_lower(c);
  while (!key.empty()) {
    const char c = key.back();
    if (c == '.' || c == '!' || c == '?' || c == ';' || c == ':' || c == ',' || c == ' ') {
      key.pop_back();
    } else {
      break;
    }
  }
  return key;
}

std::vector<SentenceRecord> deduplicate(std::vector<SentenceRecord> records) {
  std::unordered_set<std::string> seen;
  seen.reserve(records.size());
  std::vector<SentenceRecord> out;
  out.reserve(records.size());
  for (auto& r : records) {
    if (seen.insert(dedup_key(r.text)).second) out.push_back(std::move(r));
  }
  return out;
}

void recount_sources(CorpusManifest& manifest) {
  manifest.per_source_counts.clear();
  for (const auto& r : manifest.records) ++manifest.per_source_counts[r.source_name];
}

CorpusManifest stratified_split(CorpusManifest manifest, double train_frac, std::uint64_t seed,
                                double test_frac) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw Error(Errc::invalid_argument, "train_frac must lie in (0, 1)");
  }
  if (!(test_frac >= 0.0 && train_frac + test_frac <= 1.0)) {
    throw Error(Errc::invalid_argument, "test_frac must be >= 0 with train_frac + test_frac <= 1");
  }
  for (const auto& r : manifest.records) {
    if (r.split != Split::unassigned) {
      throw Error(Errc::already_split, "record " + r.sent_id + " already has a split");
    }
  }
  std::map<std::string, std::vector<std::size_t>> by_source;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    by_source[manifest.records[i].source_name].push_back(i);
  }
  for (auto& [source, idx] : by_source) {
    Rng rng(derive_seed(seed, source));
    for (std::size_t k = idx.size(); k > 1; --k) {
      std::swap(idx[k - 1], idx[rng.uniform_index(k)]);
    }
    const std::size_t n = idx.size();
    const std::size_t n_train = std::min(n, round_half_up(train_frac * static_cast<double>(n)));
    const std::size_t n_test =
        std::min(n - n_train, round_half_up(test_frac * static_cast<double>(n)));
    for (std::size_t k = 0; k < n; ++k) {
      auto& split = manifest.records[idx[k]].split;
      split = k < n_train ? Split::train : (k < n_train + n_test ? Split::test : Split::val);
    }
  }
  manifest.seed = seed;
  recount_sources(manifest);
  return manifest;
}

CorpusStats corpus_stats(const CorpusManifest& manifest, const encoder::Tokenizer& tokenizer) {
  if (manifest.records.empty()) {
    throw Error(Errc::empty_corpus, "corpus statistics need at least one sentence");
  }
  CorpusStats stats;
  stats.sentence_count = manifest.records.size();
  std::set<std::string> terms;
  std::vector<double> lengths;
  lengths.reserve(manifest.records.size());
  for (const auto& r : manifest.records) {
    std::size_t i = 0;
    const auto& t = r.text;
    while (i < t.size()) {
      while (i < t.size() && is_space(t[i])) ++i;
      const std::size_t b = i;
      while (i < t.size() && !is_space(t[i])) ++i;
      if (i > b) {
        ++stats.word_count;
        std::string w = t.substr(b, i - b);
        for (auto& c : w) c = ascii_lower(c);
        terms.insert(std::move(w));
      }
    }
    const auto n_tokens = tokenizer.tokenize(r.text).size();
    stats.token_count += n_tokens;
    lengths.push_back(static_cast<double>(n_tokens));
  }
  stats.unique_term_count = terms.size();
  const double n = static_cast<double>(lengths.size());
  const double mean = std::accumulate(lengths.begin(), lengths.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : lengths) ss += (x - mean) * (x - mean);
  stats.mean_len_tokens = mean;
  stats.sd_len_tokens = std::sqrt(ss / n);
  return stats;
}

CorpusManifest prepare_corpus(std::span<const RawDocument> documents,
                              const PrepareOptions& options) {
  std::vector<const RawDocument*> docs;
  docs.reserve(documents.size());
  std::set<std::string_view> ids;
  for (const auto& d : documents) {
    if (d.doc_id.empty()) throw Error(Errc::invalid_argument, "document with empty doc_id");
    if (!ids.insert(d.doc_id).second) {
      throw Error(Errc::invalid_argument, "duplicate doc_id '" + d.doc_id + "'");
    }
    docs.push_back(&d);
  }
  std::stable_sort(docs.begin(), docs.end(), [](const RawDocument* a, const RawDocument* b) {
    return a->source_name < b->source_name;
  });

  std::vector<std::vector<std::string>> sentences(docs.size());
  parallel_for(docs.size(), options.threads, [&](std::size_t i) {
    std::vector<std::string> all;
    for (const auto& para : split_paragraphs(docs[i]->text)) {
      for (auto& s : segment_sentences(clean_text(para))) all.push_back(std::move(s));
    }
    sentences[i] = filter_short(std::move(all), options.min_chars);
  });

  std::vector<SentenceRecord> records;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (std::size_t k = 0; k < sentences[i].size(); ++k) {
      SentenceRecord r;
      r.sent_id = docs[i]->doc_id + ":" + std::to_string(k);
      r.source_name = docs[i]->source_name;
      r.text = std::move(sentences[i][k]);
      r.char_len = utf8_length(r.text);
      records.push_back(std::move(r));
    }
  }

  CorpusManifest manifest;
  manifest.records = deduplicate(std::move(records));
  recount_sources(manifest);
  return stratified_split(std::move(manifest), options.train_frac, options.seed,
                          options.test_frac);
}

}  // namespace dembed::corpus
