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

// Corpus ingestion: dated headlines -> normalized tokens -> vocabulary ->
// per-document word distributions on the unit simplex.

#ifndef WIG_CORPUS_H_
#define WIG_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "wig/calendar.h"

namespace wig::corpus {

struct RawDocument {
  Date date;
  std::string text;
};

// One JSON object per line with string fields "date" (YYYY-MM-DD) and
// "text". Blank lines are skipped. Records whose text is empty after trimming
// are rejected with kParse, as are invalid dates.
std::vector<RawDocument> ReadJsonLines(std::istream& in);
std::vector<RawDocument> ReadJsonLinesFile(const std::string& path);

using TokenList = std::vector<std::string>;

// Normalization tables. Phrases are stored already normalized, as token
// sequences; a matched phrase becomes one token joined with '_'.
struct TokenRules {
  std::unordered_set<std::string> stopwords;
  std::unordered_map<std::string, std::string> lemmas;
  std::vector<TokenList> phrases;

  // Shipped English stopword list and lemma table, no phrases.
  static TokenRules Defaults();
};

std::unordered_set<std::string> ParseStopwords(std::istream& in);
// "surface<TAB>lemma" per line.
std::unordered_map<std::string, std::string> ParseLemmaTable(std::istream& in);
// One multiword phrase per line, normalized with the same character rules as
// the text.
std::vector<TokenList> ParsePhrases(std::istream& in);

// Empty path keeps the shipped default for that table.
TokenRules LoadTokenRules(const std::string& stopwords_path,
                          const std::string& lemmas_path,
                          const std::string& phrases_path);

// Lowercase, strip everything outside [a-z0-9] (hyphens included), join
// phrases, drop stopwords, lemmatize, drop tokens shorter than 2 bytes.
TokenList Tokenize(std::string_view text, const TokenRules& rules);

class Vocabulary {
 public:
  Vocabulary() = default;
  // Tokens must be unique; they are stored in lexicographic order.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(std::size_t i) const { return tokens_[i]; }
  std::optional<std::size_t> Find(std::string_view token) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Keeps tokens whose corpus frequency is at least min_count (>= 1).
// Throws kEmptyVocabulary when nothing survives.
Vocabulary BuildVocabulary(std::span<const TokenList> docs, int min_count);

// Column-sparse bag-of-words counts with per-document dates. Every column has
// at least one nonzero count.
class DocumentMatrix {
 public:
  struct Entry {
    std::uint32_t row;
    std::uint32_t count;
    bool operator==(const Entry&) const = default;
  };

  DocumentMatrix() = default;
  DocumentMatrix(std::size_t num_words, std::vector<std::vector<Entry>> columns,
                 std::vector<Date> dates);

  std::size_t num_words() const { return num_words_; }
  std::size_t num_docs() const { return columns_.size(); }
  const std::vector<Date>& dates() const { return dates_; }
  std::span<const Entry> column(std::size_t m) const { return columns_[m]; }
  std::uint64_t ColumnTotal(std::size_t m) const;

  // Column m divided by its total; sums to one.
  Eigen::VectorXd Distribution(std::size_t m) const;
  // Dense N x |cols| block of distributions.
  Eigen::MatrixXd Distributions(std::span<const std::size_t> cols) const;
  Eigen::MatrixXd DenseDistributions() const;
  Eigen::MatrixXd DenseCounts() const;

  // Subset of documents in the given order.
  DocumentMatrix Select(std::span<const std::size_t> cols) const;

  bool operator==(const DocumentMatrix&) const = default;

 private:
  std::size_t num_words_ = 0;
  std::vector<std::vector<Entry>> columns_;
  std::vector<Date> dates_;
};

struct VectorizeResult {
  DocumentMatrix matrix;
  // Input positions of documents with no in-vocabulary token.
  std::vector<std::size_t> dropped;
};

// Throws kAllDocumentsEmpty when every document drops.
VectorizeResult Vectorize(std::span<const TokenList> docs,
                          std::span<const Date> dates, const Vocabulary& vocab);

// Full corpus stage. Documents are ordered by (date, input position) before
// anything else happens, so all outputs share that order.
struct PreparedCorpus {
  std::vector<TokenList> tokens;
  std::vector<Date> token_dates;
  Vocabulary vocab;
  DocumentMatrix matrix;
  std::vector<std::size_t> dropped;
};

PreparedCorpus Prepare(const std::vector<RawDocument>& docs,
                       const TokenRules& rules, int min_count);

// Serialization. Binary layout for the matrix: magic "WIGDOC01", u64 N, u64 M,
// then per document u32 yyyymmdd, u64 nnz, nnz x (u32 row, u32 count), all
// little-endian.
void WriteDocumentMatrix(std::ostream& out, const DocumentMatrix& matrix);
DocumentMatrix ReadDocumentMatrix(std::istream& in);

void WriteVocabulary(std::ostream& out, const Vocabulary& vocab);
Vocabulary ReadVocabulary(std::istream& in);

// "YYYY-MM-DD<TAB>tok tok tok" per line.
void WriteTokenizedDocuments(std::ostream& out, std::span<const TokenList> docs,
                             std::span<const Date> dates);
void ReadTokenizedDocuments(std::istream& in, std::vector<TokenList>& docs,
                            std::vector<Date>& dates);

}  // namespace wig::corpus

#endif  // WIG_CORPUS_H_
