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

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <utility>

#include <openssl/evp.h>

#include "binary_io.h"
#include "wig/corpus.h"
#include "wig/eval.h"
#include "wig/format.h"
#include "wig/index.h"

namespace wig::pipeline {
namespace {

namespace fs = std::filesystem;

const std::vector<std::pair<std::string, std::string>>& DefaultEntries() {
  static const std::vector<std::pair<std::string, std::string>> kEntries = {
      {"corpus.input", ""},
      {"corpus.stopwords", ""},
      {"corpus.lemmas", ""},
      {"corpus.phrases", ""},
      {"corpus.min_count", "1"},
      {"embed.depth", "10"},
      {"embed.window", "5"},
      {"embed.negatives", "5"},
      {"embed.epochs", "5"},
      {"embed.learning_rate", "0.025"},
      {"sinkhorn.epsilon", "0.1"},
      {"sinkhorn.unroll_iters", "50"},
      {"sinkhorn.max_iter", "1000"},
      {"sinkhorn.tol", "1e-09"},
      {"train.topics", "4"},
      {"train.batch_size", "64"},
      {"train.learning_rate", "0.005"},
      {"train.epochs", "100"},
      {"train.loss", "kl"},
      {"train.beta1", "0.9"},
      {"train.beta2", "0.999"},
      {"train.eps_hat", "1e-08"},
      {"train.holdout_fraction", "0"},
      {"train.early_stop_patience", "5"},
      {"train.early_stop_tol", "0.0001"},
      {"train.heldout_passes", "10"},
      {"train.threads", "0"},
      {"index.flip", "false"},
      {"index.monthly_mean", "false"},
      {"index.top_tokens", "20"},
      {"eval.reference", ""},
      {"eval.hp_lambda", "129600"},
      {"eval.signed_cumdiff", "false"},
      {"eval.plot", "false"},
      {"tune.epsilon", ""},
      {"tune.batch_size", ""},
      {"tune.topics", ""},
      {"tune.learning_rate", ""},
      {"tune.embed_depth", ""},
      {"tune.holdout_fraction", "0.3333333333333333"},
      {"run.seed", "1"},
      {"run.output", "wig_out"},
  };
  return kEntries;
}

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename Int>
Int ParseInteger(std::string_view text, std::string_view key) {
  Int value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "'" + std::string(key) + "' expects an integer, got '" + std::string(text) + "'");
  }
  return value;
}

double ParseReal(std::string_view text, std::string_view key) {
  try {
    return ParseDouble(text);
  } catch (const Error&) {
    throw Error(ErrorCode::kInvalidArgument,
                "'" + std::string(key) + "' expects a number, got '" + std::string(text) + "'");
  }
}

std::string ReadWholeFile(const fs::path& path) {
  std::ifstream in = internal::OpenIn(path.string(), true);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Owns <root>/.wig.lock for its lifetime and the staging directory.
class Workspace {
 public:
  explicit Workspace(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + root_.string() + ": " + ec.message());
    lock_ = root_ / ".wig.lock";
    lock_fd_ = ::open(lock_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (lock_fd_ < 0) {
      if (errno == EEXIST) {
        throw Error(ErrorCode::kOutputLocked, root_.string() +
                                                  " is in use by another run (remove " +
                                                  lock_.string() + " if it is stale)");
      }
      throw Error(ErrorCode::kIo, "cannot create " + lock_.string());
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    if (::write(lock_fd_, pid.data(), pid.size()) < 0) {
      // The pid is informational only.
    }
    staging_ = root_ / ".staging";
    fs::remove_all(staging_, ec);
    fs::create_directories(staging_, ec);
    if (ec) {
      Release();
      throw Error(ErrorCode::kIo, "cannot create " + staging_.string());
    }
  }

  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  ~Workspace() {
    std::error_code ec;
    if (!done_) fs::remove_all(staging_, ec);
    Release();
  }

  const fs::path& root() const { return root_; }
  fs::path Out(std::string_view name) const { return staging_ / name; }

  fs::path In(std::string_view name) const {
    if (fs::exists(staging_ / name)) return staging_ / name;
    if (fs::exists(root_ / name)) return root_ / name;
    throw Error(ErrorCode::kMissingStageInput, "expected " + (root_ / name).string());
  }

  void Commit() {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(staging_)) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) fs::rename(f, root_ / f.filename());
    fs::remove_all(staging_);
    done_ = true;
  }

  void Quarantine(const StageError& e) {
    std::error_code ec;
    const fs::path q = root_ / "quarantine";
    fs::remove_all(q, ec);
    fs::rename(staging_, q, ec);
    if (ec) fs::create_directories(q, ec);
    std::ofstream out(q / "error.txt");
    out << "stage=" << e.stage() << "\nerror=" << e.what() << '\n';
    done_ = true;
  }

 private:
  void Release() {
    if (lock_fd_ >= 0) {
      ::close(lock_fd_);
      lock_fd_ = -1;
      std::error_code ec;
      fs::remove(lock_, ec);
    }
  }

  fs::path root_;
  fs::path staging_;
  fs::path lock_;
  int lock_fd_ = -1;
  bool done_ = false;
};

class Manifest {
 public:
  void Input(std::string_view name, const fs::path& path) {
    inputs_.emplace_back(name, GitBlobSha1File(path));
  }
  void Output(std::string_view name, const fs::path& path) {
    outputs_.emplace_back(name, GitBlobSha1File(path));
  }
  void Result(std::string_view key, std::string value) {
    results_.emplace_back(key, std::move(value));
  }
  void Result(std::string_view key, double value) { Result(key, FormatDouble(value)); }
  void Result(std::string_view key, std::size_t value) { Result(key, std::to_string(value)); }

  void Absorb(std::string_view prefix, const Manifest& other) {
    for (const auto& [k, v] : other.inputs_) {
      if (std::find_if(inputs_.begin(), inputs_.end(),
                       [&](const auto& e) { return e.first == k; }) == inputs_.end()) {
        inputs_.emplace_back(k, v);
      }
    }
    for (const auto& [k, v] : other.outputs_) outputs_.emplace_back(k, v);
    for (const auto& [k, v] : other.results_) {
      results_.emplace_back(std::string(prefix) + "." + k, v);
    }
  }

  // Stage outputs that are later consumed count as outputs, not inputs.
  void DropInternalInputs() {
    std::erase_if(inputs_, [&](const auto& in) {
      return std::any_of(outputs_.begin(), outputs_.end(),
                         [&](const auto& out) { return out.first == in.first; });
    });
  }

  std::string Render(std::string_view title, const Config& config) const {
    std::ostringstream out;
    out << "# wig " << title << " manifest\n" << config.Echo();
    auto section = [&](std::string_view name, const auto& entries) {
      out << "\n[manifest." << name << "]\n";
      for (const auto& [k, v] : entries) out << k << '=' << v << '\n';
    };
    section("inputs", inputs_);
    section("outputs", outputs_);
    section("results", results_);
    return out.str();
  }

 private:
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
  std::vector<std::pair<std::string, std::string>> results_;
};

fs::path ExternalInput(const Config& c, std::string_view key) {
  const std::string& value = c.Get(key);
  if (value.empty()) {
    throw Error(ErrorCode::kInvalidArgument, std::string(key) + " is not set");
  }
  if (!fs::is_regular_file(value)) {
    throw Error(ErrorCode::kMissingStageInput, "expected " + value + " (" + std::string(key) + ")");
  }
  return value;
}

void Log(std::ostream* log, const std::string& line) {
  if (log) *log << line << std::endl;
}

template <typename Fn>
void WriteOutput(Workspace& ws, Manifest& m, std::string_view name, bool binary, Fn&& fn) {
  const fs::path path = ws.Out(name);
  {
    std::ofstream out = internal::OpenOut(path.string(), binary);
    fn(out);
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
  }
  m.Output(name, path);
}

template <typename T, typename Fn>
T ReadInput(Workspace& ws, Manifest& m, std::string_view name, bool binary, Fn&& fn) {
  const fs::path path = ws.In(name);
  m.Input(name, path);
  std::ifstream in = internal::OpenIn(path.string(), binary);
  return fn(in);
}

corpus::Vocabulary LoadVocab(Workspace& ws, Manifest& m) {
  return ReadInput<corpus::Vocabulary>(ws, m, "vocab.txt", false,
                                       [](std::istream& in) { return corpus::ReadVocabulary(in); });
}

corpus::DocumentMatrix LoadDocs(Workspace& ws, Manifest& m) {
  return ReadInput<corpus::DocumentMatrix>(
      ws, m, "docs.bin", true, [](std::istream& in) { return corpus::ReadDocumentMatrix(in); });
}

std::vector<corpus::TokenList> LoadTokens(Workspace& ws, Manifest& m) {
  return ReadInput<std::vector<corpus::TokenList>>(ws, m, "tokens.txt", false,
                                                   [](std::istream& in) {
                                                     std::vector<corpus::TokenList> docs;
                                                     std::vector<Date> dates;
                                                     corpus::ReadTokenizedDocuments(in, docs, dates);
                                                     return docs;
                                                   });
}

CostMatrix EmbedCost(const std::vector<corpus::TokenList>& tokens,
                     const corpus::Vocabulary& vocab, const embedding::EmbedConfig& cfg,
                     double* scale) {
  const auto emb = embedding::TrainEmbeddings(tokens, vocab, cfg);
  auto norm = embedding::NormalizeByMedian(embedding::ComputeCostMatrix(emb));
  if (scale) *scale = norm.scale;
  return std::move(norm.cost);
}

void StagePrep(const Config& c, Workspace& ws, Manifest& m, std::ostream* log) {
  const fs::path input = ExternalInput(c, "corpus.input");
  m.Input("corpus.input", input);
  std::array<std::string, 3> rule_paths;
  const std::array<std::string_view, 3> rule_keys = {"corpus.stopwords", "corpus.lemmas",
                                                     "corpus.phrases"};
  for (std::size_t i = 0; i < rule_keys.size(); ++i) {
    if (c.Get(rule_keys[i]).empty()) continue;
    rule_paths[i] = ExternalInput(c, rule_keys[i]).string();
    m.Input(rule_keys[i], rule_paths[i]);
  }
  const auto raw = corpus::ReadJsonLinesFile(input.string());
  const auto rules = corpus::LoadTokenRules(rule_paths[0], rule_paths[1], rule_paths[2]);
  const auto prep = corpus::Prepare(raw, rules, c.GetInt("corpus.min_count"));
  Log(log, "prep: " + std::to_string(raw.size()) + " documents, vocabulary " +
               std::to_string(prep.vocab.size()) + ", dropped " +
               std::to_string(prep.dropped.size()));

  WriteOutput(ws, m, "vocab.txt", false,
              [&](std::ostream& out) { corpus::WriteVocabulary(out, prep.vocab); });
  WriteOutput(ws, m, "tokens.txt", false, [&](std::ostream& out) {
    corpus::WriteTokenizedDocuments(out, prep.tokens, prep.token_dates);
  });
  WriteOutput(ws, m, "docs.bin", true,
              [&](std::ostream& out) { corpus::WriteDocumentMatrix(out, prep.matrix); });
  WriteOutput(ws, m, "dropped.txt", false, [&](std::ostream& out) {
    for (std::size_t i : prep.dropped) out << i << '\n';
  });
  m.Result("documents_read", raw.size());
  m.Result("documents_kept", prep.matrix.num_docs());
  m.Result("documents_dropped", prep.dropped.size());
  m.Result("vocabulary_size", prep.vocab.size());
}

void StageEmbed(const Config& c, Workspace& ws, Manifest& m, std::ostream* log) {
  const auto tokens = LoadTokens(ws, m);
  const auto vocab = LoadVocab(ws, m);
  const auto cfg = c.Embed();
  const auto emb = embedding::TrainEmbeddings(tokens, vocab, cfg);
  const auto norm = embedding::NormalizeByMedian(embedding::ComputeCostMatrix(emb));
  Log(log, "embed: " + std::to_string(vocab.size()) + " x " + std::to_string(emb.depth()) +
               ", cost scale " + FormatDouble(norm.scale));
  WriteOutput(ws, m, "embeddings.bin", true, [&](std::ostream& out) {
    embedding::WriteMatrixBinary(out, embedding::kEmbeddingMagic, emb.vectors);
  });
  WriteOutput(ws, m, "cost.bin", true, [&](std::ostream& out) {
    embedding::WriteMatrixBinary(out, embedding::kCostMagic, norm.cost.entries());
  });
  m.Result("vocabulary_size", vocab.size());
  m.Result("depth", static_cast<std::size_t>(emb.depth()));
  m.Result("cost_scale", norm.scale);
}

void StageTrain(const Config& c, Workspace& ws, Manifest& m, std::ostream* log) {
  const auto docs = LoadDocs(ws, m);
  const CostMatrix cost(ReadInput<Eigen::MatrixXd>(ws, m, "cost.bin", true, [](std::istream& in) {
    return embedding::ReadMatrixBinary(in, embedding::kCostMagic);
  }));
  if (static_cast<std::size_t>(cost.size()) != docs.num_words()) {
    throw Error(ErrorCode::kParse, "cost.bin covers " + std::to_string(cost.size()) +
                                       " words but docs.bin has " +
                                       std::to_string(docs.num_words()));
  }
  auto tcfg = c.Train();
  tcfg.diagnostics_path = ws.Out("diagnostics.txt").string();
  const auto result = training::Train(
      docs.DenseDistributions(), cost, tcfg, c.Sinkhorn(), [&](const training::LossRecord& r) {
        std::string line = "train: epoch " + std::to_string(r.epoch) + " loss " +
                           FormatDouble(r.train_loss);
        if (!std::isnan(r.heldout_loss)) line += " heldout " + FormatDouble(r.heldout_loss);
        Log(log, line);
        return true;
      });

  // The checkpoint carries weights for every document in corpus order:
  // trained columns for training documents, refitted ones for heldout ones.
  const Eigen::Index k = result.model.num_topics();
  Eigen::MatrixXd a(k, static_cast<Eigen::Index>(docs.num_docs()));
  for (std::size_t i = 0; i < result.train_docs.size(); ++i) {
    a.col(static_cast<Eigen::Index>(result.train_docs[i])) =
        result.model.a().col(static_cast<Eigen::Index>(i));
  }
  for (std::size_t i = 0; i < result.heldout_docs.size(); ++i) {
    a.col(static_cast<Eigen::Index>(result.heldout_docs[i])) =
        result.heldout.a.col(static_cast<Eigen::Index>(i));
  }
  const training::Checkpoint ckpt{training::DictionaryModel(result.model.r(), a), c.Echo()};
  WriteOutput(ws, m, "model.ckpt", true,
              [&](std::ostream& out) { training::WriteCheckpoint(out, ckpt); });
  WriteOutput(ws, m, "loss_trace.csv", false,
              [&](std::ostream& out) { training::WriteLossTrace(out, result.trace); });
  m.Result("loss", std::string(training::LossKindName(tcfg.loss)));
  m.Result("epochs_run", result.trace.size());
  m.Result("early_stopped", std::string(result.early_stopped ? "true" : "false"));
  m.Result("train_documents", result.train_docs.size());
  m.Result("heldout_documents", result.heldout_docs.size());
  m.Result("final_train_loss", result.trace.back().train_loss);
  if (!result.heldout_docs.empty()) {
    m.Result("final_heldout_loss", result.trace.back().heldout_loss);
  }
}

void StageIndex(const Config& c, Workspace& ws, Manifest& m, std::ostream* log) {
  const auto ckpt = ReadInput<training::Checkpoint>(
      ws, m, "model.ckpt", true, [](std::istream& in) { return training::ReadCheckpoint(in); });
  const auto docs = LoadDocs(ws, m);
  const auto vocab = LoadVocab(ws, m);
  const auto& model = ckpt.model;
  if (static_cast<std::size_t>(model.num_docs()) != docs.num_docs() ||
      static_cast<std::size_t>(model.num_words()) != vocab.size()) {
    throw Error(ErrorCode::kParse, "model.ckpt does not match docs.bin and vocab.txt");
  }
  const auto proj = index::SvdProject(model.topics(), c.GetBool("index.flip"));
  const Eigen::VectorXd scores = index::DocumentScores(proj.t_hat, model.weights());
  const auto raw = index::AggregateMonthly(
      std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())),
      docs.dates(), c.GetBool("index.monthly_mean"));
  const auto scaled = index::ScaleIndex(raw);
  Log(log, "index: " + std::to_string(scaled.size()) + " months");
  WriteOutput(ws, m, "index.csv", false,
              [&](std::ostream& out) { index::WriteIndexCsv(out, scaled); });
  WriteOutput(ws, m, "topics.csv", false, [&](std::ostream& out) {
    index::WriteTopicReport(out, model.topics(), vocab, c.GetInt("index.top_tokens"));
  });
  m.Result("months", scaled.size());
  m.Result("sigma", proj.sigma);
  for (Eigen::Index k = 0; k < proj.t_hat.size(); ++k) {
    m.Result("t_hat." + std::to_string(k), proj.t_hat[k]);
  }
}

void StageEval(const Config& c, Workspace& ws, Manifest& m, std::ostream* log) {
  const fs::path ref_path = ExternalInput(c, "eval.reference");
  const auto series = ReadInput<index::IndexSeries>(
      ws, m, "index.csv", false, [](std::istream& in) { return index::ReadIndexCsv(in); });
  m.Input("eval.reference", ref_path);
  std::ifstream ref_in = internal::OpenIn(ref_path.string(), false);
  const auto reference = index::ReadIndexCsv(ref_in);
  const auto report = eval::Evaluate(series, reference, c.GetDouble("eval.hp_lambda"),
                                     c.GetBool("eval.signed_cumdiff"));
  Log(log, "eval: pearson raw " + FormatDouble(report.pearson.raw) + ", " +
               std::to_string(report.common_months) + " common months");
  WriteOutput(ws, m, "eval_report.csv", false,
              [&](std::ostream& out) { eval::WriteReportCsv(out, report); });
  WriteOutput(ws, m, "cumdiff.csv", false,
              [&](std::ostream& out) { index::WriteIndexCsv(out, report.cumdiff); });
  if (c.GetBool("eval.plot")) {
    WriteOutput(ws, m, "eval.svg", false, [&](std::ostream& out) {
      eval::WritePlotSvg(out, series, reference, report.cumdiff);
    });
  }
  m.Result("pearson_raw", report.pearson.raw);
  m.Result("pearson_trend", report.pearson.trend);
  m.Result("pearson_cycle", report.pearson.cycle);
  m.Result("spearman_raw", report.spearman.raw);
  m.Result("spearman_trend", report.spearman.trend);
  m.Result("spearman_cycle", report.spearman.cycle);
  m.Result("common_months", report.common_months);
}

void StageTune(const Config& c, Workspace& ws, Manifest& m, std::ostream* log) {
  const auto tokens = LoadTokens(ws, m);
  const auto vocab = LoadVocab(ws, m);
  const auto docs = LoadDocs(ws, m);
  const Eigen::MatrixXd y = docs.DenseDistributions();
  const double holdout = c.GetDouble("tune.holdout_fraction");
  if (!(holdout > 0.0 && holdout < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tune.holdout_fraction must be in (0, 1)");
  }

  auto grid = [&](std::string_view tune_key, std::string_view base_key) {
    auto values = c.GetList(tune_key);
    if (values.empty()) values.push_back(c.Get(base_key));
    return values;
  };
  const auto eps_list = grid("tune.epsilon", "sinkhorn.epsilon");
  const auto batch_list = grid("tune.batch_size", "train.batch_size");
  const auto topic_list = grid("tune.topics", "train.topics");
  const auto lr_list = grid("tune.learning_rate", "train.learning_rate");
  const auto depth_list = grid("tune.embed_depth", "embed.depth");

  struct Point {
    std::string eps, batch, topics, lr, depth;
    double loss;
  };
  std::vector<Point> points;
  for (const auto& depth : depth_list) {
    auto ecfg = c.Embed();
    ecfg.depth = ParseInteger<int>(depth, "tune.embed_depth");
    const CostMatrix cost = EmbedCost(tokens, vocab, ecfg, nullptr);
    for (const auto& eps : eps_list) {
      for (const auto& batch : batch_list) {
        for (const auto& topics : topic_list) {
          for (const auto& lr : lr_list) {
            auto scfg = c.Sinkhorn();
            scfg.epsilon = ParseReal(eps, "tune.epsilon");
            auto tcfg = c.Train();
            tcfg.batch_size = ParseInteger<int>(batch, "tune.batch_size");
            tcfg.topics = ParseInteger<int>(topics, "tune.topics");
            tcfg.learning_rate = ParseReal(lr, "tune.learning_rate");
            tcfg.holdout_fraction = holdout;
            const auto result = training::Train(y, cost, tcfg, scfg);
            points.push_back({eps, batch, topics, lr, depth, result.trace.back().heldout_loss});
            Log(log, "tune: epsilon=" + eps + " batch_size=" + batch + " topics=" + topics +
                         " learning_rate=" + lr + " embed_depth=" + depth + " heldout " +
                         FormatDouble(points.back().loss));
          }
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].loss < points[best].loss) best = i;
  }
  WriteOutput(ws, m, "tune.csv", false, [&](std::ostream& out) {
    out << "epsilon,batch_size,topics,learning_rate,embed_depth,heldout_loss,selected\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      out << p.eps << ',' << p.batch << ',' << p.topics << ',' << p.lr << ',' << p.depth << ','
          << FormatDouble(p.loss) << ',' << (i == best ? 1 : 0) << '\n';
    }
  });
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    const std::string key = "grid." + std::to_string(i);
    m.Result(key + ".params", "epsilon=" + p.eps + " batch_size=" + p.batch + " topics=" +
                                  p.topics + " learning_rate=" + p.lr + " embed_depth=" + p.depth);
    m.Result(key + ".heldout_loss", p.loss);
  }
  m.Result("selected", best);
  m.Result("selected.epsilon", points[best].eps);
  m.Result("selected.batch_size", points[best].batch);
  m.Result("selected.topics", points[best].topics);
  m.Result("selected.learning_rate", points[best].lr);
  m.Result("selected.embed_depth", points[best].depth);
  m.Result("selected.heldout_loss", points[best].loss);
}

void Dispatch(Stage stage, const Config& c, Workspace& ws, Manifest& m, std::ostream* log) {
  try {
    switch (stage) {
      case Stage::kPrep: StagePrep(c, ws, m, log); break;
      case Stage::kEmbed: StageEmbed(c, ws, m, log); break;
      case Stage::kTrain: StageTrain(c, ws, m, log); break;
      case Stage::kIndex: StageIndex(c, ws, m, log); break;
      case Stage::kEval: StageEval(c, ws, m, log); break;
      case Stage::kTune: StageTune(c, ws, m, log); break;
    }
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(std::string(StageName(stage)), e);
  } catch (const std::exception& e) {
    throw StageError(std::string(StageName(stage)), Error(ErrorCode::kIo, e.what()));
  }
  const std::string name = std::string(StageName(stage)) + ".manifest";
  std::ofstream out = internal::OpenOut(ws.Out(name).string(), false);
  out << m.Render(StageName(stage), c);
}

}  // namespace

Config Config::Defaults() {
  Config c;
  for (const auto& [k, v] : DefaultEntries()) {
    c.order_.push_back(k);
    c.values_.emplace(k, v);
  }
  return c;
}

bool Config::IsKnown(std::string_view key) const { return values_.find(key) != values_.end(); }

void Config::Set(std::string_view key, std::string_view value) {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown configuration key '" + std::string(key) + "'");
  }
  it->second = std::string(Trim(value));
}

const std::string& Config::Get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown configuration key '" + std::string(key) + "'");
  }
  return it->second;
}

double Config::GetDouble(std::string_view key) const { return ParseReal(Get(key), key); }

int Config::GetInt(std::string_view key) const { return ParseInteger<int>(Get(key), key); }

std::uint64_t Config::GetUint(std::string_view key) const {
  return ParseInteger<std::uint64_t>(Get(key), key);
}

bool Config::GetBool(std::string_view key) const {
  const std::string& v = Get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::kInvalidArgument,
              "'" + std::string(key) + "' expects true or false, got '" + v + "'");
}

std::vector<std::string> Config::GetList(std::string_view key) const {
  std::vector<std::string> out;
  std::string_view rest = Get(key);
  if (Trim(rest).empty()) return out;
  while (true) {
    const auto comma = rest.find(',');
    const auto item = Trim(rest.substr(0, comma));
    if (item.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "empty item in list '" + std::string(key) + "'");
    }
    out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

void Config::Merge(std::istream& in, std::string_view origin) {
  std::string line;
  std::string section;
  bool skip = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view text = Trim(line);
    if (text.empty() || text.front() == '#') continue;
    const std::string where = std::string(origin) + ":" + std::to_string(lineno);
    if (text.front() == '[') {
      if (text.back() != ']') throw Error(ErrorCode::kInvalidArgument, where + ": bad section");
      section = std::string(Trim(text.substr(1, text.size() - 2)));
      skip = section == "manifest" || section.starts_with("manifest.");
      continue;
    }
    if (skip) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidArgument, where + ": expected key=value");
    }
    std::string key(Trim(text.substr(0, eq)));
    if (!section.empty()) key = section + "." + key;
    if (!IsKnown(key)) {
      throw Error(ErrorCode::kInvalidArgument, where + ": unknown key '" + key + "'");
    }
    Set(key, text.substr(eq + 1));
  }
}

void Config::MergeFile(const std::string& path) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::kInvalidArgument, "config file not found: " + path);
  }
  std::ifstream in = internal::OpenIn(path, false);
  Merge(in, path);
}

std::string Config::Echo() const {
  std::ostringstream out;
  std::string section;
  for (const auto& key : order_) {
    const auto dot = key.find('.');
    const std::string s = key.substr(0, dot);
    if (s != section) {
      out << (section.empty() ? "" : "\n") << '[' << s << "]\n";
      section = s;
    }
    out << key.substr(dot + 1) << '=' << values_.find(key)->second << '\n';
  }
  return out.str();
}

embedding::EmbedConfig Config::Embed() const {
  embedding::EmbedConfig cfg;
  cfg.depth = GetInt("embed.depth");
  cfg.window = GetInt("embed.window");
  cfg.negatives = GetInt("embed.negatives");
  cfg.epochs = GetInt("embed.epochs");
  cfg.learning_rate = GetDouble("embed.learning_rate");
  cfg.seed = GetUint("run.seed");
  cfg.Validate();
  return cfg;
}

transport::SinkhornConfig Config::Sinkhorn() const {
  transport::SinkhornConfig cfg;
  cfg.epsilon = GetDouble("sinkhorn.epsilon");
  cfg.unroll_iters = GetInt("sinkhorn.unroll_iters");
  cfg.max_iter = GetInt("sinkhorn.max_iter");
  cfg.tol = GetDouble("sinkhorn.tol");
  cfg.Validate();
  return cfg;
}

training::TrainConfig Config::Train() const {
  training::TrainConfig cfg;
  cfg.topics = GetInt("train.topics");
  cfg.batch_size = GetInt("train.batch_size");
  cfg.learning_rate = GetDouble("train.learning_rate");
  cfg.epochs = GetInt("train.epochs");
  cfg.loss = training::ParseLossKind(Get("train.loss"));
  cfg.beta1 = GetDouble("train.beta1");
  cfg.beta2 = GetDouble("train.beta2");
  cfg.eps_hat = GetDouble("train.eps_hat");
  cfg.holdout_fraction = GetDouble("train.holdout_fraction");
  cfg.early_stop_patience = GetInt("train.early_stop_patience");
  cfg.early_stop_tol = GetDouble("train.early_stop_tol");
  cfg.heldout_passes = GetInt("train.heldout_passes");
  cfg.threads = GetInt("train.threads");
  cfg.seed = GetUint("run.seed");
  cfg.Validate();
  return cfg;
}

std::string GitBlobSha1(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), content.data(), content.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error(ErrorCode::kIo, "SHA-1 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 15];
  }
  return hex;
}

std::string GitBlobSha1File(const std::filesystem::path& path) {
  return GitBlobSha1(ReadWholeFile(path));
}

Stage ParseStage(std::string_view name) {
  for (Stage s : {Stage::kPrep, Stage::kEmbed, Stage::kTrain, Stage::kIndex, Stage::kEval,
                  Stage::kTune}) {
    if (StageName(s) == name) return s;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown stage '" + std::string(name) + "'");
}

std::string_view StageName(Stage stage) {
  switch (stage) {
    case Stage::kPrep: return "prep";
    case Stage::kEmbed: return "embed";
    case Stage::kTrain: return "train";
    case Stage::kIndex: return "index";
    case Stage::kEval: return "eval";
    case Stage::kTune: return "tune";
  }
  return "unknown";
}

StageError::StageError(std::string stage, const Error& cause)
    : Error(cause.code(), "stage " + stage + ": " + cause.message()), stage_(std::move(stage)) {}

void RunStage(Stage stage, const Config& config, std::ostream* log) {
  Workspace ws(config.Get("run.output"));
  Manifest m;
  try {
    Dispatch(stage, config, ws, m, log);
  } catch (const StageError& e) {
    ws.Quarantine(e);
    throw;
  }
  ws.Commit();
}

void RunPipeline(const Config& config, std::ostream* log) {
  Workspace ws(config.Get("run.output"));
  std::vector<Stage> stages = {Stage::kPrep, Stage::kEmbed, Stage::kTrain, Stage::kIndex};
  if (!config.Get("eval.reference").empty()) stages.push_back(Stage::kEval);
  Manifest run;
  try {
    for (Stage stage : stages) {
      Manifest m;
      Dispatch(stage, config, ws, m, log);
      run.Absorb(StageName(stage), m);
    }
    run.DropInternalInputs();
    std::ofstream out = internal::OpenOut(ws.Out("run.manifest").string(), false);
    out << run.Render("run", config);
  } catch (const StageError& e) {
    ws.Quarantine(e);
    throw;
  } catch (const Error& e) {
    const StageError wrapped("run", e);
    ws.Quarantine(wrapped);
    throw wrapped;
  }
  ws.Commit();
}

int ExitCodeFor(const Error& error) {
  switch (ClassOf(error.code())) {
    case ErrorClass::kUsage: return 1;
    case ErrorClass::kData: return 2;
    case ErrorClass::kNumerical: return 3;
  }
  return 2;
}

}  // namespace wig::pipeline
