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

#include "wig/pipeline.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.h"
#include "wig/error.h"
#include "wig/index.h"
#include "wig/synthetic.h"
#include "wig/training.h"

namespace wig::pipeline {
namespace {

namespace fs = std::filesystem;
using testing_util::ReadFile;
using testing_util::ScratchDir;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

// A small headline corpus and a configuration that trains it quickly.
class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    synthetic::HeadlineConfig hc;
    hc.docs = 240;
    hc.vocabulary = 60;
    hc.months = 24;
    const auto corpus = synthetic::MakeHeadlines(hc);
    corpus_ = dir_.path() / "corpus.jsonl";
    std::ofstream(corpus_) << [&] {
      std::ostringstream s;
      synthetic::WriteJsonLines(s, corpus.docs);
      return s.str();
    }();
    config_ = Config::Defaults();
    config_.Set("corpus.input", corpus_.string());
    config_.Set("embed.epochs", "1");
    config_.Set("sinkhorn.unroll_iters", "5");
    config_.Set("train.topics", "2");
    config_.Set("train.epochs", "2");
    config_.Set("train.batch_size", "64");
    config_.Set("run.output", (dir_.path() / "out").string());
  }

  fs::path Out(const std::string& name) const { return dir_.path() / "out" / name; }

  ScratchDir dir_;
  fs::path corpus_;
  Config config_;
};

TEST(ConfigTest, DefaultsCarryTheShippedHyperparameters) {
  const Config c = Config::Defaults();
  EXPECT_EQ(c.GetInt("embed.depth"), 10);
  EXPECT_EQ(c.GetDouble("sinkhorn.epsilon"), 0.1);
  EXPECT_EQ(c.GetInt("train.batch_size"), 64);
  EXPECT_EQ(c.GetInt("train.topics"), 4);
  EXPECT_EQ(c.GetDouble("train.learning_rate"), 0.005);
  EXPECT_EQ(c.GetDouble("eval.hp_lambda"), 129600.0);
  EXPECT_EQ(c.Get("train.loss"), "kl");
  EXPECT_EQ(c.Sinkhorn().unroll_iters, 50);
}

TEST(ConfigTest, MergeParsesSectionsAndRejectsUnknownKeys) {
  Config c = Config::Defaults();
  std::istringstream in(
      "# comment\n[train]\ntopics = 8\nloss=l2\n\n[manifest.inputs]\nbogus=1\n"
      "[sinkhorn]\nepsilon=0.05\n");
  c.Merge(in);
  EXPECT_EQ(c.GetInt("train.topics"), 8);
  EXPECT_EQ(c.Train().loss, training::LossKind::kL2);
  EXPECT_EQ(c.GetDouble("sinkhorn.epsilon"), 0.05);
  std::istringstream bad("[train]\nwidth=3\n");
  EXPECT_EQ(CodeOf([&] { c.Merge(bad); }), ErrorCode::kInvalidArgument);
  std::istringstream malformed("[train\n");
  EXPECT_THROW(c.Merge(malformed), Error);
  EXPECT_THROW(c.Set("nope.key", "1"), Error);
}

TEST(ConfigTest, TypedAccessorsValidate) {
  Config c = Config::Defaults();
  c.Set("index.flip", "yes");
  EXPECT_TRUE(c.GetBool("index.flip"));
  c.Set("index.flip", "maybe");
  EXPECT_THROW(c.GetBool("index.flip"), Error);
  c.Set("train.topics", "four");
  EXPECT_THROW(c.GetInt("train.topics"), Error);
  c.Set("tune.topics", " 2, 4 ,8");
  EXPECT_EQ(c.GetList("tune.topics"), (std::vector<std::string>{"2", "4", "8"}));
  c.Set("tune.topics", "2,,8");
  EXPECT_THROW(c.GetList("tune.topics"), Error);
  c.Set("train.batch_size", "0");
  EXPECT_THROW(c.Train(), Error);
}

TEST(ConfigTest, EchoRoundTripsThroughMerge) {
  Config c = Config::Defaults();
  c.Set("train.topics", "3");
  c.Set("corpus.input", "/data/x.jsonl");
  std::istringstream in(c.Echo());
  Config d = Config::Defaults();
  d.Merge(in);
  EXPECT_EQ(d.Echo(), c.Echo());
}

TEST(GitBlobSha1Test, MatchesGitObjectIds) {
  EXPECT_EQ(GitBlobSha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(GitBlobSha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(StageTest, NamesRoundTrip) {
  for (Stage s : {Stage::kPrep, Stage::kEmbed, Stage::kTrain, Stage::kIndex, Stage::kEval,
                  Stage::kTune}) {
    EXPECT_EQ(ParseStage(StageName(s)), s);
  }
  EXPECT_THROW(ParseStage("deploy"), Error);
}

TEST(ExitCodeTest, ClassesMapToCodes) {
  EXPECT_EQ(ExitCodeFor(Error(ErrorCode::kInvalidArgument, "x")), 1);
  EXPECT_EQ(ExitCodeFor(Error(ErrorCode::kMissingStageInput, "x")), 2);
  EXPECT_EQ(ExitCodeFor(Error(ErrorCode::kEmptyVocabulary, "x")), 2);
  EXPECT_EQ(ExitCodeFor(Error(ErrorCode::kNonFiniteLoss, "x")), 3);
  EXPECT_EQ(ExitCodeFor(Error(ErrorCode::kZeroVariance, "x")), 2);
  EXPECT_EQ(ExitCodeFor(Error(ErrorCode::kDegenerateSvd, "x")), 3);
}

TEST_F(PipelineTest, StagesChainThroughFiles) {
  for (Stage s : {Stage::kPrep, Stage::kEmbed, Stage::kTrain, Stage::kIndex}) {
    RunStage(s, config_);
    EXPECT_TRUE(fs::exists(Out(std::string(StageName(s)) + ".manifest")));
  }
  for (const char* f : {"vocab.txt", "tokens.txt", "docs.bin", "embeddings.bin", "cost.bin",
                        "model.ckpt", "loss_trace.csv", "index.csv", "topics.csv"}) {
    EXPECT_TRUE(fs::exists(Out(f))) << f;
  }
  EXPECT_FALSE(fs::exists(Out(".wig.lock")));
  EXPECT_FALSE(fs::exists(Out(".staging")));
  const std::string train_manifest = ReadFile(Out("train.manifest"));
  EXPECT_NE(train_manifest.find("docs.bin=" + GitBlobSha1File(Out("docs.bin"))),
            std::string::npos);
  EXPECT_NE(train_manifest.find("model.ckpt=" + GitBlobSha1File(Out("model.ckpt"))),
            std::string::npos);

  std::istringstream csv(ReadFile(Out("index.csv")));
  const index::IndexSeries s = index::ReadIndexCsv(csv);
  EXPECT_EQ(s.size(), 24u);
  const double mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / 24.0;
  double ss = 0.0;
  for (double v : s.values) ss += (v - mean) * (v - mean);
  EXPECT_NEAR(mean, 100.0, 1e-6);
  EXPECT_NEAR(std::sqrt(ss / 23.0), 1.0, 1e-6);
}

TEST_F(PipelineTest, CheckpointReloadsLosslessly) {
  RunStage(Stage::kPrep, config_);
  RunStage(Stage::kEmbed, config_);
  RunStage(Stage::kTrain, config_);
  const std::string bytes = ReadFile(Out("model.ckpt"));
  std::istringstream in(bytes);
  const training::Checkpoint ckpt = training::ReadCheckpoint(in);
  EXPECT_EQ(ckpt.config_echo, config_.Echo());
  EXPECT_EQ(ckpt.model.num_topics(), 2);
  std::ostringstream out;
  training::WriteCheckpoint(out, ckpt);
  EXPECT_EQ(out.str(), bytes);
}

TEST_F(PipelineTest, MissingInputNamesTheExpectedPath) {
  try {
    RunStage(Stage::kTrain, config_);
    FAIL() << "expected MissingStageInput";
  } catch (const StageError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingStageInput);
    EXPECT_EQ(e.stage(), "train");
    EXPECT_NE(std::string(e.what()).find(Out("docs.bin").string()), std::string::npos);
  }
  EXPECT_TRUE(fs::exists(Out("quarantine/error.txt")));
  EXPECT_NE(ReadFile(Out("quarantine/error.txt")).find("stage=train"), std::string::npos);
}

TEST_F(PipelineTest, LockedOutputIsRefused) {
  fs::create_directories(Out(""));
  std::ofstream(Out(".wig.lock")) << "1\n";
  EXPECT_EQ(CodeOf([&] { RunStage(Stage::kPrep, config_); }), ErrorCode::kOutputLocked);
  EXPECT_TRUE(fs::exists(Out(".wig.lock")));
}

TEST_F(PipelineTest, EvalAgainstItselfIsPerfect) {
  for (Stage s : {Stage::kPrep, Stage::kEmbed, Stage::kTrain, Stage::kIndex}) {
    RunStage(s, config_);
  }
  const fs::path ref = dir_.path() / "reference.csv";
  fs::copy_file(Out("index.csv"), ref);
  config_.Set("eval.reference", ref.string());
  config_.Set("eval.plot", "true");
  RunStage(Stage::kEval, config_);
  EXPECT_EQ(ReadFile(Out("eval_report.csv")),
            "metric,value\npearson_raw,1\npearson_trend,1\npearson_cycle,1\n"
            "spearman_raw,1\nspearman_trend,1\nspearman_cycle,1\n"
            "hp_lambda,129600\ncommon_months,24\n");
  EXPECT_TRUE(fs::exists(Out("eval.svg")));
  std::istringstream cum(ReadFile(Out("cumdiff.csv")));
  for (double v : index::ReadIndexCsv(cum).values) EXPECT_EQ(v, 0.0);
}

TEST_F(PipelineTest, RunIsDeterministicAndManifestReproducesTheConfig) {
  RunPipeline(config_);
  const std::string first_index = ReadFile(Out("index.csv"));
  const std::string first_ckpt = ReadFile(Out("model.ckpt"));
  const std::string manifest = ReadFile(Out("run.manifest"));
  EXPECT_NE(manifest.find("[manifest.inputs]\ncorpus.input=" + GitBlobSha1File(corpus_)),
            std::string::npos);
  EXPECT_NE(manifest.find("embed.cost_scale="), std::string::npos);
  EXPECT_NE(manifest.find("train.loss=kl"), std::string::npos);

  Config again = Config::Defaults();
  std::istringstream in(manifest);
  again.Merge(in);
  EXPECT_EQ(again.Echo(), config_.Echo());
  fs::remove_all(Out(""));
  RunPipeline(again);
  EXPECT_EQ(ReadFile(Out("index.csv")), first_index);
  EXPECT_EQ(ReadFile(Out("model.ckpt")), first_ckpt);
}

TEST_F(PipelineTest, FailingRunIsQuarantined) {
  config_.Set("corpus.min_count", "100000");
  try {
    RunPipeline(config_);
    FAIL() << "expected EmptyVocabulary";
  } catch (const StageError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyVocabulary);
    EXPECT_EQ(e.stage(), "prep");
    EXPECT_EQ(ExitCodeFor(e), 2);
  }
  EXPECT_TRUE(fs::exists(Out("quarantine/error.txt")));
  EXPECT_FALSE(fs::exists(Out("index.csv")));
  EXPECT_FALSE(fs::exists(Out(".wig.lock")));
}

TEST_F(PipelineTest, TuneRecordsEveryGridPointAndTheMinimum) {
  RunStage(Stage::kPrep, config_);
  config_.Set("tune.topics", "2,4,8");
  config_.Set("train.epochs", "1");
  RunStage(Stage::kTune, config_);
  const std::string manifest = ReadFile(Out("tune.manifest"));
  std::vector<double> losses;
  for (int i = 0; i < 3; ++i) {
    const std::string key = "grid." + std::to_string(i) + ".heldout_loss=";
    const auto pos = manifest.find(key);
    ASSERT_NE(pos, std::string::npos) << key;
    losses.push_back(std::stod(manifest.substr(pos + key.size())));
    EXPECT_NE(manifest.find("grid." + std::to_string(i) + ".params="), std::string::npos);
  }
  const auto best = static_cast<std::size_t>(
      std::min_element(losses.begin(), losses.end()) - losses.begin());
  EXPECT_NE(manifest.find("selected=" + std::to_string(best) + "\n"), std::string::npos);
  const char* topics[] = {"2", "4", "8"};
  EXPECT_NE(manifest.find(std::string("selected.topics=") + topics[best] + "\n"),
            std::string::npos);
  const std::string csv = ReadFile(Out("tune.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

}  // namespace
}  // namespace wig::pipeline
