// Subcommands of the fewner command-line tool.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric error.

#ifndef FEWNER_TOOLS_COMMANDS_H_
#define FEWNER_TOOLS_COMMANDS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fewner::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericError = 3 };

struct StatsArgs {
  std::filesystem::path conll;
  std::string schema = "bio";
};

struct SampleArgs {
  std::filesystem::path conll;
  int shots = 5;
  uint64_t seed = 0;
  std::filesystem::path out;
  std::string schema = "bio";
};

struct TrainArgs {
  std::string scheme;
  std::filesystem::path config;
  std::filesystem::path train;
  std::optional<std::filesystem::path> source;
  std::optional<std::filesystem::path> unlabeled;
  std::filesystem::path out;
  std::optional<uint64_t> seed;
  std::string schema = "bio";
};

struct EvalArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path test;
  std::string schema = "bio";
  std::optional<std::filesystem::path> support;
};

struct ProtoInferArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path support;
  std::filesystem::path test;
  int shots = 5;
  std::string schema = "bio";
  uint64_t seed = 0;
};

int CmdStats(const StatsArgs &args, std::ostream &out, std::ostream &err);
int CmdSample(const SampleArgs &args, std::ostream &out, std::ostream &err);
// Writes the checkpoint to args.out, plus <out>.metrics.json (per-stage loss
// histories) and <out>.manifest.json (run record).
int CmdTrain(const TrainArgs &args, std::ostream &out, std::ostream &err);
int CmdEval(const EvalArgs &args, std::ostream &out, std::ostream &err);
int CmdProtoInfer(const ProtoInferArgs &args, std::ostream &out, std::ostream &err);

// Parses argv-style arguments (args[0] is the program name) and dispatches.
int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

std::filesystem::path ManifestPath(const std::filesystem::path &checkpoint);
std::filesystem::path MetricsPath(const std::filesystem::path &checkpoint);

// Hex SHA-256 of a file's bytes.
std::string FileSha256(const std::filesystem::path &path);

}  // namespace fewner::cli

#endif  // FEWNER_TOOLS_COMMANDS_H_
