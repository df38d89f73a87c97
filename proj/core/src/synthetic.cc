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

#include "wig/synthetic.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "wig/embedding.h"
#include "wig/error.h"

namespace wig::synthetic {
namespace {

Eigen::VectorXd Dirichlet(Eigen::Index k, double alpha, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  Eigen::VectorXd w(k);
  for (Eigen::Index i = 0; i < k; ++i) w[i] = gamma(rng);
  const double total = w.sum();
  if (!(total > 0.0)) return Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  return w / total;
}

// Index drawn with probability proportional to 1 / (rank + 1).
std::size_t Zipf(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / static_cast<double>(i + 1);
  std::discrete_distribution<std::size_t> dist(w.begin(), w.end());
  return dist(rng);
}

}  // namespace

PlantedCorpus MakePlantedCorpus(const PlantedConfig& cfg,
                                const transport::SinkhornConfig& scfg) {
  if (cfg.words < 2 || cfg.topics < 1 || cfg.topics > cfg.words || cfg.docs < 1 ||
      cfg.dimension < 1 || !(cfg.topic_width > 0.0) || !(cfg.concentration > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid planted corpus configuration");
  }
  scfg.Validate();
  const Eigen::Index n = cfg.words;
  const Eigen::Index k = cfg.topics;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;

  embedding::EmbeddingMatrix points;
  points.vectors.resize(n, cfg.dimension);
  for (Eigen::Index i = 0; i < points.vectors.size(); ++i) points.vectors.data()[i] = normal(rng);
  PlantedCorpus out;
  out.cost = embedding::NormalizeByMedian(embedding::ComputeCostMatrix(points)).cost;

  // Farthest-point centers: the most distant pair, then repeatedly the word
  // whose nearest chosen center is farthest.
  std::vector<Eigen::Index> centers;
  Eigen::Index a = 0, b = 0;
  out.cost.entries().maxCoeff(&a, &b);
  centers.push_back(a);
  if (k > 1) centers.push_back(b);
  while (static_cast<Eigen::Index>(centers.size()) < k) {
    Eigen::Index pick = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (Eigen::Index c : centers) nearest = std::min(nearest, out.cost(i, c));
      if (nearest > best) {
        best = nearest;
        pick = i;
      }
    }
    centers.push_back(pick);
  }

  const double scale = 2.0 * cfg.topic_width * cfg.topic_width;
  out.topics.resize(n, k);
  for (Eigen::Index t = 0; t < k; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out.topics(i, t) = std::exp(-out.cost(i, centers[static_cast<std::size_t>(t)]) / scale);
    }
    out.topics.col(t) /= out.topics.col(t).sum();
  }

  out.weights.resize(k, cfg.docs);
  for (Eigen::Index m = 0; m < cfg.docs; ++m) {
    out.weights.col(m) = Dirichlet(k, cfg.concentration, rng);
  }

  const transport::GibbsKernel kernel(out.cost, scfg.epsilon);
  transport::BarycenterTape tape(kernel, scfg.unroll_iters);
  out.docs = tape.Forward(out.topics.array().log().matrix(), out.weights).array().exp();
  for (Eigen::Index m = 0; m < cfg.docs; ++m) out.docs.col(m) /= out.docs.col(m).sum();
  return out;
}

double MatchedTotalVariation(const Eigen::MatrixXd& truth,
                             const Eigen::MatrixXd& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols() ||
      truth.cols() < 1 || truth.cols() > 9) {
    throw Error(ErrorCode::kInvalidArgument,
                "topic matching needs equal shapes and 1..9 columns");
  }
  const Eigen::Index k = truth.cols();
  Eigen::MatrixXd tv(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      tv(a, b) = 0.5 * (truth.col(a) - estimate.col(b)).cwiseAbs().sum();
    }
  }
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double total = 0.0;
    for (Eigen::Index a = 0; a < k; ++a) total += tv(a, perm[static_cast<std::size_t>(a)]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(k);
}

HeadlineCorpus MakeHeadlines(const HeadlineConfig& cfg) {
  if (cfg.docs < 1 || cfg.vocabulary < 2 * cfg.themes || cfg.months < 1 ||
      cfg.themes < 1 || cfg.min_words < 1 || cfg.max_words < cfg.min_words) {
    throw Error(ErrorCode::kInvalidArgument, "invalid headline configuration");
  }
  std::mt19937_64 rng(cfg.seed);
  const corpus::TokenRules rules = corpus::TokenRules::Defaults();

  static constexpr std::string_view kConsonants = "bdfgklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  std::uniform_int_distribution<std::size_t> pick_c(0, kConsonants.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_v(0, kVowels.size() - 1);
  std::uniform_int_distribution<int> pick_len(2, 3);
  std::vector<std::string> words;
  std::set<std::string> seen;
  while (words.size() < static_cast<std::size_t>(cfg.vocabulary)) {
    std::string w;
    for (int s = pick_len(rng); s > 0; --s) {
      w += kConsonants[pick_c(rng)];
      w += kVowels[pick_v(rng)];
    }
    const auto toks = corpus::Tokenize(w, rules);
    if (toks.size() == 1 && toks[0] == w && seen.insert(w).second) words.push_back(w);
  }

  // Half the words are split evenly among themes, the rest are shared.
  const auto per_theme = static_cast<std::size_t>(cfg.vocabulary / 2 / cfg.themes);
  const std::size_t shared_begin = per_theme * static_cast<std::size_t>(cfg.themes);

  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Eigen::VectorXd> mix(static_cast<std::size_t>(cfg.months));
  Eigen::VectorXd level = Eigen::VectorXd::Zero(cfg.themes);
  for (int g = 0; g < cfg.months; ++g) {
    for (int t = 0; t < cfg.themes; ++t) level[t] = 0.8 * level[t] + 0.5 * noise(rng);
    level[0] += 0.6 * std::sin(2.0 * std::numbers::pi * g / 12.0) / 2.0;
    const Eigen::VectorXd e = level.array().exp();
    mix[static_cast<std::size_t>(g)] = e / e.sum();
  }

  HeadlineCorpus out;
  std::vector<int> per_month(static_cast<std::size_t>(cfg.months), 0);
  std::vector<int> theme0(static_cast<std::size_t>(cfg.months), 0);
  std::uniform_int_distribution<int> pick_month(0, cfg.months - 1);
  std::uniform_int_distribution<int> pick_day(1, 28);
  std::uniform_int_distribution<int> pick_words(cfg.min_words, cfg.max_words);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  static constexpr std::string_view kFiller[] = {"the", "of", "on", "in", "and", "to"};
  const std::chrono::year_month first{cfg.start.year(), cfg.start.month()};
  for (int d = 0; d < cfg.docs; ++d) {
    const int g = pick_month(rng);
    const auto& w = mix[static_cast<std::size_t>(g)];
    std::discrete_distribution<int> pick_theme(w.data(), w.data() + w.size());
    const int theme = pick_theme(rng);
    ++per_month[static_cast<std::size_t>(g)];
    if (theme == 0) ++theme0[static_cast<std::size_t>(g)];
    std::string text;
    for (int i = pick_words(rng); i > 0; --i) {
      std::string word;
      if (unif(rng) < 0.7) {
        word = words[static_cast<std::size_t>(theme) * per_theme + Zipf(per_theme, rng)];
      } else {
        word = words[shared_begin + Zipf(words.size() - shared_begin, rng)];
      }
      if (i == 1 || unif(rng) < 0.5) word[0] = static_cast<char>(std::toupper(word[0]));
      if (!text.empty()) text += ' ';
      text += word;
      if (unif(rng) < 0.2) text += std::string(" ") + std::string(kFiller[rng() % 6]);
    }
    const auto ym = first + std::chrono::months{g};
    out.docs.push_back({ym / std::chrono::day{static_cast<unsigned>(pick_day(rng))}, text});
  }
  std::stable_sort(out.docs.begin(), out.docs.end(),
                   [](const auto& a, const auto& b) { return a.date < b.date; });
  for (int g = 0; g < cfg.months; ++g) {
    const int count = per_month[static_cast<std::size_t>(g)];
    if (count == 0) continue;
    out.theme_share.months.push_back(first + std::chrono::months{g});
    out.theme_share.values.push_back(static_cast<double>(theme0[static_cast<std::size_t>(g)]) /
                                     static_cast<double>(count));
  }
  return out;
}

void WriteJsonLines(std::ostream& out, const std::vector<corpus::RawDocument>& docs) {
  for (const auto& doc : docs) {
    nlohmann::ordered_json record;
    record["date"] = FormatDate(doc.date);
    record["text"] = doc.text;
    out << record.dump() << '\n';
  }
}

}  // namespace wig::synthetic
