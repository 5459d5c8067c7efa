// Learning schemes: linear-classifier fine-tuning, episodic prototype
// training, two-stage transfer from a noisy source corpus, and one round of
// teacher/student self-training with soft labels.

#ifndef FEWNER_TRAINING_H_
#define FEWNER_TRAINING_H_

#include <cstdint>
#include <string>
#include <vector>

#include "fewner/checkpoint.h"
#include "fewner/config.h"
#include "fewner/corpus.h"
#include "fewner/episode.h"

namespace fewner {

// Sub-seed offsets from TrainConfig::seed. The encoder is seeded with the
// base seed itself.
inline constexpr uint64_t kHeadSeedOffset = 1;
inline constexpr uint64_t kShuffleSeedOffset = 2;
inline constexpr uint64_t kEpisodeSeedOffset = 3;
inline constexpr uint64_t kUnlabeledSeedOffset = 4;
// Added to the seed for the target stage of transfer training.
inline constexpr uint64_t kTargetStageSeedOffset = 1000;

using Sentences = std::vector<std::vector<std::string>>;

struct TrainResult {
  Checkpoint model;
  // Entry 0 is the objective before the first update, entry e the objective
  // after epoch e (linear) or the mean episode loss during epoch e
  // (prototype).
  std::vector<double> loss_history;
};

Sentences TokensOf(const TaggedCorpus &corpus);

Checkpoint InitLinearModel(const Vocabulary &vocab, const LabelSet &labels,
                           const TrainConfig &config);

// Keeps the encoder of `base` and attaches a new linear head for `labels`.
Checkpoint WithFreshLinearHead(const Checkpoint &base, const LabelSet &labels,
                               uint64_t head_seed);

// Keeps the encoder of `base`; the head becomes a prototype descriptor.
Checkpoint AsPrototypeModel(const Checkpoint &base, const LabelSet &labels);

// Per-token one-hot targets over the label set's tag vocabulary.
Matrix OneHotTargets(const LabelSet &labels, const std::vector<std::string> &tags);

struct ModelGrads {
  EncoderGrads encoder;
  LinearHeadGrads head;

  static ModelGrads ZerosLike(const Checkpoint &model);
  void SetZero();
};

// Sum over tokens of KL(target_i || q_i) under the linear head. When grads is
// non-null the gradient of `scale` times that sum is added to it; encoder
// gradients are skipped when include_encoder is false.
double AccumulateLinearLoss(const Checkpoint &model, const std::vector<std::string> &tokens,
                            const Matrix &targets, double scale, ModelGrads *grads,
                            bool include_encoder = true);

// Mean per-token loss of a linear model over a corpus.
double MeanLinearLoss(const Checkpoint &model, const TaggedCorpus &corpus);

struct SoftLabeledSentence {
  std::vector<std::string> tokens;
  Matrix labels;  // T x num_tags, each row a teacher distribution
};
using SoftLabelDataset = std::vector<SoftLabeledSentence>;

// Full teacher distributions per token. Requires a linear teacher.
SoftLabelDataset GenerateSoftLabels(const Checkpoint &teacher, const Sentences &sentences);

// Mini-batch training of encoder and linear head, token-averaged loss per
// batch. Without init the vocabulary is built from the corpus and the model
// is freshly initialized; with init it must be a linear model over the
// corpus label set.
TrainResult TrainLinear(const TaggedCorpus &corpus, const TrainConfig &config,
                        const Checkpoint *init = nullptr);

// Labeled batches as in TrainLinear plus, at every step, an equal share of
// the soft-labeled set weighted by lambda_u:
//   mean_token_loss(labeled batch) + lambda_u * mean_token_loss(soft batch).
TrainResult TrainLinearWithSoftLabels(const TaggedCorpus &corpus, const SoftLabelDataset &soft,
                                      const TrainConfig &config, const Checkpoint &init);

// Mean query-token loss of one episode under prototypes built from its
// support set. Tags of types outside the episode are read as "O"; query
// tokens whose label has no support token are not scored. When grads is
// non-null, the encoder gradient of the returned loss is added to it.
double EpisodeLoss(const EncoderParams &encoder, const TaggedCorpus &corpus,
                   const Episode &episode, EncoderGrads *grads);

// Episodic training of the encoder only. Iteration count is
// ceil(epochs * |corpus| / (M * (K + K'))), with M clamped to the number of
// entity types.
TrainResult TrainPrototype(const TaggedCorpus &corpus, const TrainConfig &config,
                           const Checkpoint *init = nullptr);

struct TransferResult {
  TrainResult source_stage;
  Checkpoint target_init;
  TrainResult target_stage;
};

// Stage 1 trains on the source corpus with the given objective; stage 2 keeps
// the encoder, attaches a fresh head for the target labels and trains on the
// target with seed + kTargetStageSeedOffset. The vocabulary covers both
// corpora unless one is supplied.
TransferResult PretrainTransfer(const TaggedCorpus &source, const TaggedCorpus &target,
                                const TrainConfig &config, HeadKind objective,
                                const Vocabulary *vocab = nullptr);

struct SelfTrainResult {
  TrainResult teacher;
  SoftLabelDataset soft_labels;
  Checkpoint student_init;
  TrainResult student;
};

// Teacher: TrainLinear on the labeled corpus. Student: a fresh model over the
// labeled and unlabeled vocabulary (or base's encoder with a fresh head),
// trained by TrainLinearWithSoftLabels. Teacher and student draw from the
// same seeds.
SelfTrainResult SelfTrain(const TaggedCorpus &labeled, const Sentences &unlabeled,
                          const TrainConfig &config, const Checkpoint *base = nullptr);

}  // namespace fewner

#endif  // FEWNER_TRAINING_H_
