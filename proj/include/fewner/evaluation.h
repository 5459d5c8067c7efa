// Tag prediction from trained models or prototype sets, entity-level
// precision/recall/F1, and repeated-run aggregation.

#ifndef FEWNER_EVALUATION_H_
#define FEWNER_EVALUATION_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fewner/checkpoint.h"
#include "fewner/corpus.h"
#include "fewner/heads.h"

namespace fewner {

// Argmax of the linear head per token.
std::vector<std::string> PredictTags(const Checkpoint &model,
                                     const std::vector<std::string> &tokens);

// Highest-scoring prototype label per token (MultiProtoScore, which equals
// nearest-centroid for single-centroid sets). Prototype labels index `labels`.
std::vector<std::string> PredictTags(const EncoderParams &encoder, const PrototypeSet &protos,
                                     const LabelSet &labels,
                                     const std::vector<std::string> &tokens);

// Support representations of every token grouped by tag index in `labels`.
SupportReprs CollectSupport(const EncoderParams &encoder, const TaggedCorpus &support,
                            const LabelSet &labels);

struct TypeScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  size_t support = 0;  // gold chunks

  bool operator==(const TypeScores &) const = default;
};

struct ChunkCounts {
  size_t gold = 0;
  size_t predicted = 0;
  size_t correct = 0;

  bool operator==(const ChunkCounts &) const = default;
};

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::map<std::string, TypeScores> per_type;
  ChunkCounts counts;

  bool operator==(const EvalReport &) const = default;
};

// Precision, recall and F1 from counts; 0/0 is 0.
TypeScores ScoresFromCounts(size_t gold, size_t predicted, size_t correct);

// Micro-averaged exact-match chunk scores. predicted[s] must have the length
// of gold.sentences[s]; both sides are chunked under `schema` (gold tags are
// converted from the corpus schema first, predictions are taken as given).
EvalReport EntityF1(const TaggedCorpus &gold,
                    const std::vector<std::vector<std::string>> &predicted, Schema schema);

std::string EvalReportToJson(const EvalReport &report);

struct AggregateReport {
  double mean_f1 = 0.0;
  double std_f1 = 0.0;  // sample (n - 1) standard deviation, 0 for n = 1
  std::vector<EvalReport> runs;

  bool operator==(const AggregateReport &) const = default;
};

AggregateReport Aggregate(std::vector<EvalReport> runs);

// Runs `experiment(seed)` for seeds base_seed .. base_seed + n - 1.
AggregateReport RepeatedEval(const std::function<EvalReport(uint64_t)> &experiment,
                             int n_repeats, uint64_t base_seed);

// "0.779 ± 0.040"
std::string FormatMeanStd(double mean, double std);

std::string AggregateReportToJson(const AggregateReport &report);

}  // namespace fewner

#endif  // FEWNER_EVALUATION_H_
