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

#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "wig/error.h"

namespace wig::synthetic {
namespace {

TEST(PlantedCorpusTest, ShapesAndSimplexColumns) {
  PlantedConfig cfg;
  cfg.docs = 40;
  const PlantedCorpus p = MakePlantedCorpus(cfg, transport::SinkhornConfig());
  ASSERT_EQ(p.topics.rows(), 30);
  ASSERT_EQ(p.topics.cols(), 3);
  ASSERT_EQ(p.weights.cols(), 40);
  ASSERT_EQ(p.docs.cols(), 40);
  EXPECT_EQ(p.cost.size(), 30);
  EXPECT_NEAR(p.cost.MedianOffDiagonal(), 1.0, 1e-12);
  for (const Eigen::MatrixXd* m : {&p.topics, &p.weights, &p.docs}) {
    for (Eigen::Index j = 0; j < m->cols(); ++j) {
      EXPECT_NEAR(m->col(j).sum(), 1.0, 1e-12);
      EXPECT_GE(m->col(j).minCoeff(), 0.0);
    }
  }
  // Each topic peaks on a different word.
  std::set<Eigen::Index> peaks;
  for (Eigen::Index t = 0; t < 3; ++t) {
    Eigen::Index i = 0;
    p.topics.col(t).maxCoeff(&i);
    peaks.insert(i);
  }
  EXPECT_EQ(peaks.size(), 3u);
}

TEST(PlantedCorpusTest, DocumentsAreBarycentersOfTheTopics) {
  PlantedConfig cfg;
  cfg.docs = 5;
  const transport::SinkhornConfig scfg;
  const PlantedCorpus p = MakePlantedCorpus(cfg, scfg);
  for (Eigen::Index m = 0; m < 5; ++m) {
    const auto b = transport::SinkhornBarycenter(p.topics, p.weights.col(m), p.cost, scfg);
    EXPECT_LT((b.mass() - p.docs.col(m)).cwiseAbs().sum(), 1e-10);
  }
}

TEST(PlantedCorpusTest, SeedDeterminesTheCorpus) {
  PlantedConfig cfg;
  cfg.docs = 10;
  const transport::SinkhornConfig scfg;
  EXPECT_EQ(MakePlantedCorpus(cfg, scfg).docs, MakePlantedCorpus(cfg, scfg).docs);
  PlantedConfig other = cfg;
  other.seed = 8;
  EXPECT_NE(MakePlantedCorpus(other, scfg).docs, MakePlantedCorpus(cfg, scfg).docs);
  other = cfg;
  other.concentration = 0.0;
  EXPECT_THROW(MakePlantedCorpus(other, scfg), Error);
}

TEST(MatchedTotalVariationTest, PermutationInvariantAndHandValue) {
  Eigen::MatrixXd t(2, 2);
  t << 1, 0, 0, 1;
  Eigen::MatrixXd swapped(2, 2);
  swapped << 0, 1, 1, 0;
  EXPECT_EQ(MatchedTotalVariation(t, swapped), 0.0);
  Eigen::MatrixXd half(2, 2);
  half << 0.5, 0.5, 0.5, 0.5;
  EXPECT_DOUBLE_EQ(MatchedTotalVariation(t, half), 0.5);
  EXPECT_THROW(MatchedTotalVariation(t, Eigen::MatrixXd::Ones(3, 2)), Error);
}

TEST(HeadlinesTest, DeterministicDatedAndTokenizable) {
  HeadlineConfig cfg;
  cfg.docs = 300;
  cfg.vocabulary = 40;
  cfg.months = 12;
  const HeadlineCorpus a = MakeHeadlines(cfg);
  const HeadlineCorpus b = MakeHeadlines(cfg);
  ASSERT_EQ(a.docs.size(), 300u);
  for (std::size_t i = 0; i < a.docs.size(); ++i) {
    EXPECT_EQ(a.docs[i].text, b.docs[i].text);
    EXPECT_EQ(a.docs[i].date, b.docs[i].date);
  }
  EXPECT_EQ(a.theme_share.size(), 12u);
  for (double v : a.theme_share.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  std::ostringstream out;
  WriteJsonLines(out, a.docs);
  std::istringstream in(out.str());
  const auto back = corpus::ReadJsonLines(in);
  ASSERT_EQ(back.size(), a.docs.size());
  EXPECT_EQ(back[7].text, a.docs[7].text);
  EXPECT_EQ(back[7].date, a.docs[7].date);
}

}  // namespace
}  // namespace wig::synthetic
