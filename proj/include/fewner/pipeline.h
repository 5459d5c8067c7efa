// End-to-end scheme execution: chains transfer, self-training and the base
// trainers according to a Scheme, and runs repeated few-shot experiments.

#ifndef FEWNER_PIPELINE_H_
#define FEWNER_PIPELINE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "fewner/evaluation.h"
#include "fewner/training.h"

namespace fewner {

struct SchemeData {
  const TaggedCorpus *target = nullptr;     // labeled target training data
  const TaggedCorpus *source = nullptr;     // noisy source corpus (nsp schemes)
  const Sentences *unlabeled = nullptr;     // unlabeled target sentences (st schemes)
};

struct StageRecord {
  std::string name;
  std::vector<double> loss_history;
};

struct SchemeRun {
  Checkpoint model;
  std::vector<StageRecord> stages;  // in execution order
};

// Throws std::invalid_argument when the scheme's required inputs are missing.
SchemeRun RunScheme(Scheme scheme, const SchemeData &data, const TrainConfig &config);

// Scores a trained model on a test corpus. Prototype models build one
// centroid per tag from `support`.
EvalReport EvaluateModel(const Checkpoint &model, const TaggedCorpus &test, Schema schema,
                         const TaggedCorpus *support = nullptr);

// Training-free scoring: multi-prototypes from the support set (K shots per
// type), encoder untouched.
EvalReport EvaluatePrototypeInference(const EncoderParams &encoder, const TaggedCorpus &support,
                                      const TaggedCorpus &test, int shots, Schema schema,
                                      uint64_t seed);

struct FewShotExperiment {
  Scheme scheme = Scheme::kLc;
  TrainConfig config;
  const TaggedCorpus *train = nullptr;  // pool the few-shot sample is drawn from
  const TaggedCorpus *test = nullptr;
  const TaggedCorpus *source = nullptr;
  const Sentences *unlabeled = nullptr;
  int shots = 5;
  Schema eval_schema = Schema::kBio;
};

// One run: SampleFewShot with `seed`, RunScheme with config.seed = seed,
// evaluation on the test corpus.
EvalReport RunFewShot(const FewShotExperiment &experiment, uint64_t seed);

AggregateReport RepeatedFewShot(const FewShotExperiment &experiment, int n_repeats,
                                uint64_t base_seed);

}  // namespace fewner

#endif  // FEWNER_PIPELINE_H_
