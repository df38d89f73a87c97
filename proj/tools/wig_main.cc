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

// wig: command-line driver for the index pipeline.
//
//   wig run --corpus headlines.jsonl --output out [--reference ref.csv]
//   wig prep|embed|train|index|eval|tune [options]
//   wig synth --corpus-out headlines.jsonl --reference-out ref.csv
//
// Settings resolve in order: defaults, --config files, --set key=value,
// then the dedicated flags below.

#include <fstream>
#include <iostream>
#include <list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "wig/error.h"
#include "wig/index.h"
#include "wig/pipeline.h"
#include "wig/synthetic.h"

namespace {

struct Overrides {
  std::vector<std::string> configs;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::optional<std::string>>> values;
  bool flip_index = false;
  bool monthly_mean = false;
  bool plot = false;
  bool signed_cumdiff = false;
  bool quiet = false;
};

void AddOptions(CLI::App& app, Overrides& o) {
  app.add_option("-c,--config", o.configs, "Configuration or manifest file (repeatable)")
      ->check(CLI::ExistingFile);
  app.add_option("--set", o.sets, "Override a setting: section.key=value (repeatable)");
  const std::vector<std::pair<std::string, std::string>> flags = {
      {"--corpus", "corpus.input"},
      {"--stopwords", "corpus.stopwords"},
      {"--lemmas", "corpus.lemmas"},
      {"--phrases", "corpus.phrases"},
      {"--min-count", "corpus.min_count"},
      {"--output,-o", "run.output"},
      {"--reference", "eval.reference"},
      {"--epsilon", "sinkhorn.epsilon"},
      {"--unroll", "sinkhorn.unroll_iters"},
      {"--topics", "train.topics"},
      {"--batch-size", "train.batch_size"},
      {"--learning-rate", "train.learning_rate"},
      {"--epochs", "train.epochs"},
      {"--holdout-fraction", "train.holdout_fraction"},
      {"--threads", "train.threads"},
      {"--loss", "train.loss"},
      {"--embed-depth", "embed.depth"},
      {"--seed", "run.seed"},
      {"--hp-lambda", "eval.hp_lambda"},
  };
  o.values.reserve(flags.size());
  for (const auto& [flag, key] : flags) {
    o.values.emplace_back(key, std::nullopt);
    auto* opt = app.add_option(flag, o.values.back().second, "Sets " + key);
    if (key == "train.loss") opt->check(CLI::IsMember({"kl", "l2"}));
  }
  app.add_flag("--flip-index", o.flip_index, "Negate the index orientation");
  app.add_flag("--monthly-mean", o.monthly_mean, "Average scores per month instead of summing");
  app.add_flag("--plot", o.plot, "Write eval.svg");
  app.add_flag("--signed-cumdiff", o.signed_cumdiff, "Accumulate signed differences");
  app.add_flag("-q,--quiet", o.quiet, "Suppress progress output");
}

wig::pipeline::Config Resolve(const Overrides& o) {
  auto config = wig::pipeline::Config::Defaults();
  for (const auto& path : o.configs) config.MergeFile(path);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw wig::Error(wig::ErrorCode::kInvalidArgument, "--set expects key=value, got " + s);
    }
    config.Set(s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [key, value] : o.values) {
    if (value) config.Set(key, *value);
  }
  if (o.flip_index) config.Set("index.flip", "true");
  if (o.monthly_mean) config.Set("index.monthly_mean", "true");
  if (o.plot) config.Set("eval.plot", "true");
  if (o.signed_cumdiff) config.Set("eval.signed_cumdiff", "true");
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wasserstein index generation"};
  app.require_subcommand(1);

  struct Command {
    CLI::App* app;
    std::optional<wig::pipeline::Stage> stage;  // empty for run
    Overrides overrides;
  };
  std::list<Command> commands;
  const std::vector<std::pair<std::string, std::string>> stage_help = {
      {"prep", "Tokenize the corpus and build the document matrix"},
      {"embed", "Train word embeddings and the cost matrix"},
      {"train", "Fit topics and document weights"},
      {"index", "Build the scaled monthly index"},
      {"eval", "Compare the index with a reference series"},
      {"tune", "Grid search over hyperparameters by heldout loss"},
  };
  for (const auto& [name, help] : stage_help) {
    auto& cmd = commands.emplace_back(Command{app.add_subcommand(name, help),
                                              wig::pipeline::ParseStage(name), {}});
    AddOptions(*cmd.app, cmd.overrides);
  }
  auto& run = commands.emplace_back(
      Command{app.add_subcommand("run", "Run prep, embed, train, index and eval"),
              std::nullopt, {}});
  AddOptions(*run.app, run.overrides);

  wig::synthetic::HeadlineConfig synth_cfg;
  std::string corpus_out = "headlines.jsonl";
  std::string reference_out;
  CLI::App* synth = app.add_subcommand("synth", "Write a synthetic headline corpus");
  synth->add_option("--corpus-out", corpus_out, "JSON-lines output path");
  synth->add_option("--reference-out", reference_out,
                    "Monthly share of the uncertainty theme, as month,value CSV");
  synth->add_option("--docs", synth_cfg.docs, "Number of headlines");
  synth->add_option("--vocabulary", synth_cfg.vocabulary, "Number of distinct words");
  synth->add_option("--months", synth_cfg.months, "Number of months");
  synth->add_option("--themes", synth_cfg.themes, "Number of themes");
  synth->add_option("--seed", synth_cfg.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      const auto corpus = wig::synthetic::MakeHeadlines(synth_cfg);
      std::ofstream out(corpus_out);
      if (!out) throw wig::Error(wig::ErrorCode::kIo, "cannot write " + corpus_out);
      wig::synthetic::WriteJsonLines(out, corpus.docs);
      if (!reference_out.empty()) {
        std::ofstream ref(reference_out);
        if (!ref) throw wig::Error(wig::ErrorCode::kIo, "cannot write " + reference_out);
        wig::index::WriteIndexCsv(ref, corpus.theme_share);
      }
      return 0;
    }
    for (const auto& cmd : commands) {
      if (!cmd.app->parsed()) continue;
      const auto config = Resolve(cmd.overrides);
      std::ostream* log = cmd.overrides.quiet ? nullptr : &std::cerr;
      if (cmd.stage) {
        wig::pipeline::RunStage(*cmd.stage, config, log);
      } else {
        wig::pipeline::RunPipeline(config, log);
      }
    }
  } catch (const wig::Error& e) {
    std::cerr << "wig: " << e.what() << '\n';
    return wig::pipeline::ExitCodeFor(e);
  } catch (const std::exception& e) {
    std::cerr << "wig: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
