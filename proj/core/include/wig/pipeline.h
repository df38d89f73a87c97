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

// Stage orchestration, run configuration and manifests.
//
// Every stage reads its inputs from, and writes its outputs to, the run's
// output directory:
//
//   prep   corpus.input        -> vocab.txt tokens.txt docs.bin dropped.txt
//   embed  tokens.txt vocab.txt -> embeddings.bin cost.bin
//   train  docs.bin cost.bin    -> model.ckpt loss_trace.csv
//   index  model.ckpt docs.bin vocab.txt -> index.csv topics.csv
//   eval   index.csv eval.reference -> eval_report.csv cumdiff.csv [eval.svg]
//   tune   tokens.txt vocab.txt docs.bin -> tune.csv
//
// and records <stage>.manifest next to them. Outputs are staged in
// <output>/.staging and moved into place only when the command succeeds; on
// failure the staging directory becomes <output>/quarantine with an
// error.txt naming the failed stage.

#ifndef WIG_PIPELINE_H_
#define WIG_PIPELINE_H_

#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "wig/embedding.h"
#include "wig/error.h"
#include "wig/training.h"
#include "wig/transport.h"

namespace wig::pipeline {

// Flat "section.key" -> value settings with shipped defaults. Unknown keys
// are rejected.
class Config {
 public:
  static Config Defaults();

  void Set(std::string_view key, std::string_view value);
  const std::string& Get(std::string_view key) const;
  bool IsKnown(std::string_view key) const;

  double GetDouble(std::string_view key) const;
  int GetInt(std::string_view key) const;
  std::uint64_t GetUint(std::string_view key) const;
  bool GetBool(std::string_view key) const;
  // Comma-separated list; empty string gives an empty list.
  std::vector<std::string> GetList(std::string_view key) const;

  // Reads "key = value" lines grouped by "[section]" headers; '#' starts a
  // comment. Sections named manifest.* are skipped so that a manifest can be
  // fed back as a configuration.
  void Merge(std::istream& in, std::string_view origin = "<config>");
  void MergeFile(const std::string& path);

  // Every effective value, grouped by section, in a fixed order.
  std::string Echo() const;

  embedding::EmbedConfig Embed() const;
  transport::SinkhornConfig Sinkhorn() const;
  training::TrainConfig Train() const;

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::string, std::less<>> values_;
};

// Git blob object id: SHA-1 of "blob <size>\0" followed by the content.
std::string GitBlobSha1(std::string_view content);
std::string GitBlobSha1File(const std::filesystem::path& path);

enum class Stage { kPrep, kEmbed, kTrain, kIndex, kEval, kTune };

Stage ParseStage(std::string_view name);
std::string_view StageName(Stage stage);

// An error raised inside a stage, tagged with the stage's name.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Runs one stage against the output directory named by run.output. Progress
// lines go to `log` when it is non-null.
void RunStage(Stage stage, const Config& config, std::ostream* log = nullptr);

// prep, embed, train, index and, when eval.reference is set, eval; then
// writes run.manifest.
void RunPipeline(const Config& config, std::ostream* log = nullptr);

// Process exit code for an error: 1 usage, 2 data, 3 numerical.
int ExitCodeFor(const Error& error);

}  // namespace wig::pipeline

#endif  // WIG_PIPELINE_H_
