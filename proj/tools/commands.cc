#include "commands.h"

#include <openssl/evp.h>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fewner/checkpoint.h"
#include "fewner/config.h"
#include "fewner/corpus.h"
#include "fewner/evaluation.h"
#include "fewner/optimizer.h"
#include "fewner/pipeline.h"
#include "fewner/training.h"

namespace fewner::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// I/O failures are reported as data errors.
class InputError : public DataError {
 public:
  using DataError::DataError;
};

std::string ReadFile(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Write to a sibling temporary, then rename over the target.
void WriteFileAtomic(const fs::path &path, const std::string &contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << contents;
    if (!out) throw InputError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

TaggedCorpus LoadCorpus(const fs::path &path, Schema schema) {
  std::string text = ReadFile(path);
  try {
    return ParseConll(text, schema);
  } catch (const ParseError &e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

Sentences LoadUnlabeled(const fs::path &path) {
  std::istringstream in(ReadFile(path));
  Sentences out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream words(line);
    std::vector<std::string> tokens{std::istream_iterator<std::string>(words),
                                    std::istream_iterator<std::string>()};
    if (!tokens.empty()) out.push_back(std::move(tokens));
  }
  return out;
}

// Maps exceptions to exit codes with a one-line message.
template <typename Fn>
int Guarded(std::ostream &err, Fn &&fn) {
  try {
    return fn();
  } catch (const NumericError &e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const ParseError &e) {
    err << "parse error: " << e.what() << "\n";
    return kDataError;
  } catch (const DataError &e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error &e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::invalid_argument &e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception &e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  }
}

json StageJson(const std::vector<StageRecord> &stages) {
  json out = json::array();
  for (const StageRecord &stage : stages) {
    out.push_back({{"stage", stage.name}, {"loss_history", stage.loss_history}});
  }
  return out;
}

}  // namespace

fs::path ManifestPath(const fs::path &checkpoint) {
  fs::path p = checkpoint;
  p += ".manifest.json";
  return p;
}

fs::path MetricsPath(const fs::path &checkpoint) {
  fs::path p = checkpoint;
  p += ".metrics.json";
  return p;
}

std::string FileSha256(const fs::path &path) {
  std::string data = ReadFile(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

int CmdStats(const StatsArgs &args, std::ostream &out, std::ostream &err) {
  return Guarded(err, [&] {
    TaggedCorpus corpus = LoadCorpus(args.conll, ParseSchema(args.schema));
    out << StatsToJson(ComputeStats(corpus)) << "\n";
    return kOk;
  });
}

int CmdSample(const SampleArgs &args, std::ostream &out, std::ostream &err) {
  return Guarded(err, [&] {
    TaggedCorpus corpus = LoadCorpus(args.conll, ParseSchema(args.schema));
    TaggedCorpus sample = SampleFewShot(corpus, args.shots, args.seed);
    WriteFileAtomic(args.out, WriteConll(sample));
    out << "sampled " << sample.sentences.size() << " of " << corpus.sentences.size()
        << " sentences into " << args.out.string() << "\n";
    return kOk;
  });
}

int CmdTrain(const TrainArgs &args, std::ostream &out, std::ostream &err) {
  return Guarded(err, [&] {
    const auto started = std::chrono::steady_clock::now();
    const Scheme scheme = ParseScheme(args.scheme);
    const Schema schema = ParseSchema(args.schema);
    TrainConfig config = ParseTrainConfig(ReadFile(args.config), args.seed);
    config.scheme = scheme;
    if (UsesNoisyPretraining(scheme) && !args.source) {
      throw std::invalid_argument("scheme " + args.scheme + " requires --source");
    }
    if (UsesSelfTraining(scheme) && !args.unlabeled) {
      throw std::invalid_argument("scheme " + args.scheme + " requires --unlabeled");
    }

    // Digests are taken before any training starts.
    json inputs = json::object();
    inputs["config"] = {{"path", args.config.string()}, {"sha256", FileSha256(args.config)}};
    inputs["train"] = {{"path", args.train.string()}, {"sha256", FileSha256(args.train)}};
    if (args.source) {
      inputs["source"] = {{"path", args.source->string()}, {"sha256", FileSha256(*args.source)}};
    }
    if (args.unlabeled) {
      inputs["unlabeled"] = {{"path", args.unlabeled->string()},
                             {"sha256", FileSha256(*args.unlabeled)}};
    }

    TaggedCorpus target = LoadCorpus(args.train, schema);
    std::optional<TaggedCorpus> source;
    std::optional<Sentences> unlabeled;
    if (UsesNoisyPretraining(scheme)) source = LoadCorpus(*args.source, schema);
    if (UsesSelfTraining(scheme)) unlabeled = LoadUnlabeled(*args.unlabeled);

    SchemeRun run = RunScheme(
        scheme,
        {&target, source ? &*source : nullptr, unlabeled ? &*unlabeled : nullptr}, config);

    SaveCheckpoint(run.model, args.out);
    json metrics;
    metrics["scheme"] = SchemeName(scheme);
    metrics["stages"] = StageJson(run.stages);
    WriteFileAtomic(MetricsPath(args.out), metrics.dump(2) + "\n");

    json manifest;
    manifest["scheme"] = SchemeName(scheme);
    manifest["schema"] = SchemaName(schema);
    manifest["config"] = json::parse(TrainConfigToJson(config));
    manifest["seeds"] = {{"base", config.seed},
                         {"encoder", config.seed},
                         {"head", config.seed + kHeadSeedOffset},
                         {"shuffle", config.seed + kShuffleSeedOffset},
                         {"episode", config.seed + kEpisodeSeedOffset},
                         {"unlabeled", config.seed + kUnlabeledSeedOffset},
                         {"target_stage", config.seed + kTargetStageSeedOffset}};
    manifest["inputs"] = inputs;
    json stage_names = json::array();
    for (const StageRecord &stage : run.stages) stage_names.push_back(stage.name);
    manifest["stages"] = stage_names;
    manifest["checkpoint"] = {{"path", args.out.string()}, {"sha256", FileSha256(args.out)}};
    manifest["metrics_path"] = MetricsPath(args.out).string();
    manifest["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    WriteFileAtomic(ManifestPath(args.out), manifest.dump(2) + "\n");

    out << "wrote " << args.out.string() << " (" << SchemeName(scheme) << ", "
        << run.stages.size() << " stages)\n";
    return kOk;
  });
}

int CmdEval(const EvalArgs &args, std::ostream &out, std::ostream &err) {
  return Guarded(err, [&] {
    const Schema schema = ParseSchema(args.schema);
    Checkpoint model = LoadCheckpoint(args.checkpoint);
    TaggedCorpus test = LoadCorpus(args.test, model.labels.schema());
    std::optional<TaggedCorpus> support;
    if (args.support) support = LoadCorpus(*args.support, model.labels.schema());
    if (model.head_kind == HeadKind::kPrototype && !support) {
      throw std::invalid_argument("prototype checkpoints need --support");
    }
    for (const std::string &type : test.labels.entity_types()) {
      if (!model.labels.HasType(type)) {
        throw DataError("vocabulary incompatibility: test entity type '" + type +
                        "' is not in the checkpoint label set");
      }
    }
    EvalReport report = EvaluateModel(model, test, schema, support ? &*support : nullptr);
    out << EvalReportToJson(report) << "\n";
    return kOk;
  });
}

int CmdProtoInfer(const ProtoInferArgs &args, std::ostream &out, std::ostream &err) {
  return Guarded(err, [&] {
    const Schema schema = ParseSchema(args.schema);
    if (args.shots < 1) throw std::invalid_argument("--shots must be positive");
    Checkpoint model = LoadCheckpoint(args.checkpoint);
    const Schema corpus_schema = model.labels.schema();
    TaggedCorpus support = LoadCorpus(args.support, corpus_schema);
    TaggedCorpus test = LoadCorpus(args.test, corpus_schema);

    std::map<std::string, int> per_type;
    for (const TokenSequence &sentence : support.sentences) {
      for (const std::string &type : TypesInSentence(sentence, corpus_schema)) ++per_type[type];
    }
    for (const std::string &type : support.labels.entity_types()) {
      if (per_type[type] < args.shots) {
        throw DataError("insufficient support: entity type '" + type + "' has " +
                        std::to_string(per_type[type]) + " sentences, --shots is " +
                        std::to_string(args.shots));
      }
    }
    EvalReport report = EvaluatePrototypeInference(model.encoder, support, test, args.shots,
                                                   schema, args.seed);
    out << EvalReportToJson(report) << "\n";
    return kOk;
  });
}

int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Few-shot named entity recognition toolkit"};
  app.require_subcommand(1);

  StatsArgs stats;
  CLI::App *stats_cmd = app.add_subcommand("stats", "Print corpus statistics as JSON");
  stats_cmd->add_option("conll", stats.conll, "CoNLL file")->required();
  stats_cmd->add_option("--schema", stats.schema, "bio or io")->capture_default_str();

  SampleArgs sample;
  CLI::App *sample_cmd =
      app.add_subcommand("sample", "Draw a K-shot subset (K sentences per entity type)");
  sample_cmd->add_option("conll", sample.conll, "CoNLL file")->required();
  sample_cmd->add_option("--shots", sample.shots, "sentences per entity type")
      ->capture_default_str();
  sample_cmd->add_option("--seed", sample.seed, "random seed")->required();
  sample_cmd->add_option("--out", sample.out, "output CoNLL file")->required();
  sample_cmd->add_option("--schema", sample.schema, "bio or io")->capture_default_str();

  TrainArgs train;
  uint64_t train_seed = 0;
  CLI::App *train_cmd = app.add_subcommand(
      "train",
      "Train a model with one scheme. Unlabeled files hold one whitespace-tokenized "
      "sentence per line.");
  train_cmd->add_option("--scheme", train.scheme, "lc, proto, lc+nsp, proto+nsp, lc+st, lc+nsp+st")
      ->required();
  train_cmd->add_option("--config", train.config, "JSON training config")->required();
  train_cmd->add_option("--train", train.train, "labeled target CoNLL file")->required();
  train_cmd->add_option("--source", train.source, "noisy source CoNLL file (nsp schemes)");
  train_cmd->add_option("--unlabeled", train.unlabeled,
                        "unlabeled sentences, one per line (st schemes)");
  train_cmd->add_option("--out", train.out, "output checkpoint")->required();
  CLI::Option *seed_opt =
      train_cmd->add_option("--seed", train_seed, "overrides the config seed");
  train_cmd->add_option("--schema", train.schema, "bio or io")->capture_default_str();

  EvalArgs eval;
  CLI::App *eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a test file");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--test", eval.test, "test CoNLL file")->required();
  eval_cmd->add_option("--schema", eval.schema, "scoring schema: bio or io")
      ->capture_default_str();
  eval_cmd->add_option("--support", eval.support, "support CoNLL file (prototype checkpoints)");

  ProtoInferArgs proto;
  CLI::App *proto_cmd = app.add_subcommand(
      "protoinfer", "Training-free inference with prototypes built from a support file");
  proto_cmd->add_option("--checkpoint", proto.checkpoint, "checkpoint file")->required();
  proto_cmd->add_option("--support", proto.support, "support CoNLL file")->required();
  proto_cmd->add_option("--test", proto.test, "test CoNLL file")->required();
  proto_cmd->add_option("--shots", proto.shots, "examples per type K (K/5 prototypes)")
      ->capture_default_str();
  proto_cmd->add_option("--schema", proto.schema, "scoring schema: bio or io")
      ->capture_default_str();
  proto_cmd->add_option("--seed", proto.seed, "k-means seed")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError &e) {
    err << e.what() << "\n";
    return kUsage;
  }

  if (*stats_cmd) return CmdStats(stats, out, err);
  if (*sample_cmd) return CmdSample(sample, out, err);
  if (*train_cmd) {
    if (*seed_opt) train.seed = train_seed;
    return CmdTrain(train, out, err);
  }
  if (*eval_cmd) return CmdEval(eval, out, err);
  if (*proto_cmd) return CmdProtoInfer(proto, out, err);
  return kUsage;
}

}  // namespace fewner::cli
