// Copyright 2026 The WIG Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wig/corpus.h"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "binary_io.h"
#include "wig/error.h"

namespace wig::internal {
extern const char kDefaultStopwords[];
extern const char kDefaultLemmas[];
}  // namespace wig::internal

namespace wig::corpus {
namespace {

constexpr std::string_view kDocMagic = "WIGDOC01";

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && IsSpace(s.front())) s.remove_prefix(1);
  while (!s.empty() && IsSpace(s.back())) s.remove_suffix(1);
  return s;
}

// Whitespace split followed by lowercasing and character stripping. Pieces
// that strip to nothing vanish.
TokenList NormalizeWords(std::string_view text) {
  TokenList out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (const char raw : text) {
    if (IsSpace(raw)) {
      flush();
      continue;
    }
    char c = raw;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) current.push_back(c);
  }
  flush();
  return out;
}

std::uint32_t PackDate(const Date& d) {
  return static_cast<std::uint32_t>(int(d.year()) * 10000 +
                                    unsigned(d.month()) * 100 +
                                    unsigned(d.day()));
}

Date UnpackDate(std::uint32_t packed) {
  const Date d{std::chrono::year{int(packed / 10000)},
               std::chrono::month{(packed / 100) % 100},
               std::chrono::day{packed % 100}};
  if (!d.ok()) throw Error(ErrorCode::kParse, "corrupt date in document file");
  return d;
}

}  // namespace

std::vector<RawDocument> ReadJsonLines(std::istream& in) {
  std::vector<RawDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kParse, where + ": " + e.what());
    }
    if (!record.is_object() || !record.contains("date") ||
        !record.contains("text") || !record["date"].is_string() ||
        !record["text"].is_string()) {
      throw Error(ErrorCode::kParse,
                  where + ": expected string fields 'date' and 'text'");
    }
    RawDocument doc;
    try {
      doc.date = ParseDate(record["date"].get<std::string>());
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, where + ": " + e.what());
    }
    doc.text = record["text"].get<std::string>();
    if (Trim(doc.text).empty()) {
      throw Error(ErrorCode::kParse, where + ": empty text");
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<RawDocument> ReadJsonLinesFile(const std::string& path) {
  auto in = internal::OpenIn(path, false);
  return ReadJsonLines(in);
}

std::unordered_set<std::string> ParseStopwords(std::istream& in) {
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& w : NormalizeWords(line)) words.insert(std::move(w));
  }
  return words;
}

std::unordered_map<std::string, std::string> ParseLemmaTable(std::istream& in) {
  std::unordered_map<std::string, std::string> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kParse, "lemma table line " +
                                         std::to_string(line_no) +
                                         ": expected surface<TAB>lemma");
    }
    const auto surface = NormalizeWords(line.substr(0, tab));
    const auto lemma = NormalizeWords(line.substr(tab + 1));
    if (surface.size() != 1 || lemma.size() != 1) {
      throw Error(ErrorCode::kParse, "lemma table line " +
                                         std::to_string(line_no) +
                                         ": entries must be single words");
    }
    table[surface[0]] = lemma[0];
  }
  return table;
}

std::vector<TokenList> ParsePhrases(std::istream& in) {
  std::vector<TokenList> phrases;
  std::string line;
  while (std::getline(in, line)) {
    auto words = NormalizeWords(line);
    if (!words.empty()) phrases.push_back(std::move(words));
  }
  // Longest first so that matching is greedy on phrase length.
  std::stable_sort(phrases.begin(), phrases.end(),
                   [](const TokenList& a, const TokenList& b) {
                     return a.size() > b.size();
                   });
  return phrases;
}

TokenRules TokenRules::Defaults() {
  TokenRules rules;
  std::istringstream stop(internal::kDefaultStopwords);
  rules.stopwords = ParseStopwords(stop);
  std::istringstream lemmas(internal::kDefaultLemmas);
  rules.lemmas = ParseLemmaTable(lemmas);
  return rules;
}

TokenRules LoadTokenRules(const std::string& stopwords_path,
                          const std::string& lemmas_path,
                          const std::string& phrases_path) {
  TokenRules rules = TokenRules::Defaults();
  if (!stopwords_path.empty()) {
    auto in = internal::OpenIn(stopwords_path, false);
    rules.stopwords = ParseStopwords(in);
  }
  if (!lemmas_path.empty()) {
    auto in = internal::OpenIn(lemmas_path, false);
    rules.lemmas = ParseLemmaTable(in);
  }
  if (!phrases_path.empty()) {
    auto in = internal::OpenIn(phrases_path, false);
    rules.phrases = ParsePhrases(in);
  }
  return rules;
}

TokenList Tokenize(std::string_view text, const TokenRules& rules) {
  const TokenList words = NormalizeWords(text);

  TokenList joined;
  joined.reserve(words.size());
  for (std::size_t i = 0; i < words.size();) {
    std::size_t matched = 0;
    for (const auto& phrase : rules.phrases) {
      if (phrase.size() < 2 || i + phrase.size() > words.size()) continue;
      if (std::equal(phrase.begin(), phrase.end(), words.begin() + i)) {
        matched = phrase.size();
        break;
      }
    }
    if (matched == 0) {
      joined.push_back(words[i]);
      ++i;
      continue;
    }
    std::string token = words[i];
    for (std::size_t k = 1; k < matched; ++k) token += "_" + words[i + k];
    joined.push_back(std::move(token));
    i += matched;
  }

  TokenList out;
  out.reserve(joined.size());
  for (auto& token : joined) {
    if (rules.stopwords.contains(token)) continue;
    if (auto it = rules.lemmas.find(token); it != rules.lemmas.end()) {
      token = it->second;
    }
    if (token.size() < 2) continue;
    out.push_back(std::move(token));
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  std::sort(tokens_.begin(), tokens_.end());
  if (std::adjacent_find(tokens_.begin(), tokens_.end()) != tokens_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate vocabulary token");
  }
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], i);
}

std::optional<std::size_t> Vocabulary::Find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary BuildVocabulary(std::span<const TokenList> docs, int min_count) {
  if (min_count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "min_count must be >= 1");
  }
  std::map<std::string, std::int64_t> freq;
  for (const auto& doc : docs) {
    for (const auto& token : doc) ++freq[token];
  }
  std::vector<std::string> kept;
  for (const auto& [token, count] : freq) {
    if (count >= min_count) kept.push_back(token);
  }
  if (kept.empty()) {
    throw Error(ErrorCode::kEmptyVocabulary,
                "no token occurs at least " + std::to_string(min_count) +
                    " times");
  }
  return Vocabulary(std::move(kept));
}

DocumentMatrix::DocumentMatrix(std::size_t num_words,
                               std::vector<std::vector<Entry>> columns,
                               std::vector<Date> dates)
    : num_words_(num_words),
      columns_(std::move(columns)),
      dates_(std::move(dates)) {
  if (columns_.size() != dates_.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "document count and date count differ");
  }
  if (num_words_ > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "vocabulary too large");
  }
  // Dense N*M indexing must stay inside 64-bit arithmetic.
  std::uint64_t cells = 0;
  if (__builtin_mul_overflow(static_cast<std::uint64_t>(num_words_),
                             static_cast<std::uint64_t>(columns_.size()),
                             &cells) ||
      cells > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    throw Error(ErrorCode::kInvalidArgument, "N*M overflows 64-bit indexing");
  }
  for (const auto& col : columns_) {
    if (col.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "empty document column");
    }
    for (std::size_t i = 0; i < col.size(); ++i) {
      if (col[i].row >= num_words_ || col[i].count == 0 ||
          (i > 0 && col[i].row <= col[i - 1].row)) {
        throw Error(ErrorCode::kInvalidArgument, "malformed document column");
      }
    }
  }
}

std::uint64_t DocumentMatrix::ColumnTotal(std::size_t m) const {
  std::uint64_t total = 0;
  for (const auto& e : columns_[m]) total += e.count;
  return total;
}

Eigen::VectorXd DocumentMatrix::Distribution(std::size_t m) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_words_));
  const double total = static_cast<double>(ColumnTotal(m));
  for (const auto& e : columns_[m]) y[e.row] = e.count / total;
  return y;
}

Eigen::MatrixXd DocumentMatrix::Distributions(
    std::span<const std::size_t> cols) const {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(num_words_), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const double total = static_cast<double>(ColumnTotal(cols[c]));
    for (const auto& e : columns_[cols[c]]) {
      y(e.row, static_cast<Eigen::Index>(c)) = e.count / total;
    }
  }
  return y;
}

Eigen::MatrixXd DocumentMatrix::DenseDistributions() const {
  std::vector<std::size_t> all(num_docs());
  std::iota(all.begin(), all.end(), 0);
  return Distributions(all);
}

Eigen::MatrixXd DocumentMatrix::DenseCounts() const {
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(num_words_), static_cast<Eigen::Index>(num_docs()));
  for (std::size_t m = 0; m < num_docs(); ++m) {
    for (const auto& e : columns_[m]) {
      counts(e.row, static_cast<Eigen::Index>(m)) = e.count;
    }
  }
  return counts;
}

DocumentMatrix DocumentMatrix::Select(std::span<const std::size_t> cols) const {
  std::vector<std::vector<Entry>> columns;
  std::vector<Date> dates;
  columns.reserve(cols.size());
  dates.reserve(cols.size());
  for (const std::size_t m : cols) {
    columns.push_back(columns_.at(m));
    dates.push_back(dates_.at(m));
  }
  return DocumentMatrix(num_words_, std::move(columns), std::move(dates));
}

VectorizeResult Vectorize(std::span<const TokenList> docs,
                          std::span<const Date> dates, const Vocabulary& vocab) {
  if (vocab.empty()) {
    throw Error(ErrorCode::kEmptyVocabulary, "cannot vectorize: empty vocabulary");
  }
  if (docs.size() != dates.size()) {
    throw Error(ErrorCode::kInvalidArgument, "document count and date count differ");
  }
  std::vector<std::vector<DocumentMatrix::Entry>> columns;
  std::vector<Date> kept_dates;
  VectorizeResult result;
  for (std::size_t m = 0; m < docs.size(); ++m) {
    std::map<std::uint32_t, std::uint32_t> counts;
    for (const auto& token : docs[m]) {
      if (auto row = vocab.Find(token)) ++counts[static_cast<std::uint32_t>(*row)];
    }
    if (counts.empty()) {
      result.dropped.push_back(m);
      continue;
    }
    std::vector<DocumentMatrix::Entry> col;
    col.reserve(counts.size());
    for (const auto& [row, count] : counts) col.push_back({row, count});
    columns.push_back(std::move(col));
    kept_dates.push_back(dates[m]);
  }
  if (columns.empty()) {
    throw Error(ErrorCode::kAllDocumentsEmpty,
                "every document is empty under the vocabulary");
  }
  result.matrix =
      DocumentMatrix(vocab.size(), std::move(columns), std::move(kept_dates));
  return result;
}

PreparedCorpus Prepare(const std::vector<RawDocument>& docs,
                       const TokenRules& rules, int min_count) {
  if (docs.empty()) throw Error(ErrorCode::kEmptyCorpus, "no documents");
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return docs[a].date < docs[b].date;
                   });
  PreparedCorpus out;
  out.tokens.reserve(docs.size());
  out.token_dates.reserve(docs.size());
  for (const std::size_t i : order) {
    out.tokens.push_back(Tokenize(docs[i].text, rules));
    out.token_dates.push_back(docs[i].date);
  }
  out.vocab = BuildVocabulary(out.tokens, min_count);
  auto vec = Vectorize(out.tokens, out.token_dates, out.vocab);
  out.matrix = std::move(vec.matrix);
  out.dropped = std::move(vec.dropped);
  return out;
}

void WriteDocumentMatrix(std::ostream& out, const DocumentMatrix& matrix) {
  internal::WriteMagic(out, kDocMagic);
  internal::WriteLE<std::uint64_t>(out, matrix.num_words());
  internal::WriteLE<std::uint64_t>(out, matrix.num_docs());
  for (std::size_t m = 0; m < matrix.num_docs(); ++m) {
    internal::WriteLE<std::uint32_t>(out, PackDate(matrix.dates()[m]));
    const auto col = matrix.column(m);
    internal::WriteLE<std::uint64_t>(out, col.size());
    for (const auto& e : col) {
      internal::WriteLE<std::uint32_t>(out, e.row);
      internal::WriteLE<std::uint32_t>(out, e.count);
    }
  }
}

DocumentMatrix ReadDocumentMatrix(std::istream& in) {
  internal::ExpectMagic(in, kDocMagic);
  const auto n = internal::ReadLE<std::uint64_t>(in);
  const auto m = internal::ReadLE<std::uint64_t>(in);
  std::vector<std::vector<DocumentMatrix::Entry>> columns;
  std::vector<Date> dates;
  columns.reserve(m);
  dates.reserve(m);
  for (std::uint64_t j = 0; j < m; ++j) {
    dates.push_back(UnpackDate(internal::ReadLE<std::uint32_t>(in)));
    const auto nnz = internal::ReadLE<std::uint64_t>(in);
    if (nnz > n) throw Error(ErrorCode::kParse, "corrupt document column");
    std::vector<DocumentMatrix::Entry> col(nnz);
    for (auto& e : col) {
      e.row = internal::ReadLE<std::uint32_t>(in);
      e.count = internal::ReadLE<std::uint32_t>(in);
    }
    columns.push_back(std::move(col));
  }
  return DocumentMatrix(n, std::move(columns), std::move(dates));
}

void WriteVocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (const auto& token : vocab.tokens()) out << token << '\n';
}

Vocabulary ReadVocabulary(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) tokens.push_back(line);
  }
  if (!std::is_sorted(tokens.begin(), tokens.end())) {
    throw Error(ErrorCode::kParse, "vocabulary file is not sorted");
  }
  return Vocabulary(std::move(tokens));
}

void WriteTokenizedDocuments(std::ostream& out, std::span<const TokenList> docs,
                             std::span<const Date> dates) {
  for (std::size_t m = 0; m < docs.size(); ++m) {
    out << FormatDate(dates[m]) << '\t';
    for (std::size_t i = 0; i < docs[m].size(); ++i) {
      if (i > 0) out << ' ';
      out << docs[m][i];
    }
    out << '\n';
  }
}

void ReadTokenizedDocuments(std::istream& in, std::vector<TokenList>& docs,
                            std::vector<Date>& dates) {
  docs.clear();
  dates.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kParse, "tokenized document line without date");
    }
    dates.push_back(ParseDate(std::string_view(line).substr(0, tab)));
    TokenList tokens;
    std::istringstream words(line.substr(tab + 1));
    std::string w;
    while (words >> w) tokens.push_back(w);
    docs.push_back(std::move(tokens));
  }
}

}  // namespace wig::corpus
