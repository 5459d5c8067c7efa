#include "fewner/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "fewner/optimizer.h"

namespace fewner {
namespace {

int64_t CeilDiv(int64_t a, int64_t b) { return (a + b - 1) / b; }

std::vector<ParamBlock> LinearBlocks(Checkpoint *model, const ModelGrads &grads,
                                     bool include_encoder) {
  std::vector<ParamBlock> blocks;
  if (include_encoder) {
    blocks.push_back(MakeBlock("encoder.embeddings", model->encoder.embeddings,
                               grads.encoder.embeddings));
    blocks.push_back(
        MakeBlock("encoder.context_weights", model->encoder.weights, grads.encoder.weights));
    blocks.push_back(
        MakeBlock("encoder.context_bias", model->encoder.bias, grads.encoder.bias));
  }
  blocks.push_back(MakeBlock("head.W", model->linear.weights, grads.head.weights));
  blocks.push_back(MakeBlock("head.b", model->linear.bias, grads.head.bias));
  return blocks;
}

void CheckLinearInit(const Checkpoint &init, const LabelSet &labels) {
  if (init.head_kind != HeadKind::kLinear) {
    throw std::invalid_argument("initial checkpoint must carry a linear head");
  }
  if (!(init.labels == labels)) {
    throw std::invalid_argument("initial checkpoint labels differ from the corpus labels");
  }
}

// Linear-head training over labeled data and an optional soft-labeled set.
TrainResult RunLinearTraining(const TaggedCorpus &corpus, const SoftLabelDataset &soft,
                              const TrainConfig &config, Checkpoint model) {
  config.Validate();
  if (corpus.sentences.empty()) throw std::invalid_argument("empty training corpus");

  std::vector<Matrix> targets;
  targets.reserve(corpus.sentences.size());
  for (const TokenSequence &sentence : corpus.sentences) {
    targets.push_back(OneHotTargets(model.labels, sentence.tags));
  }
  for (const SoftLabeledSentence &item : soft) {
    if (item.labels.rows() != static_cast<Eigen::Index>(item.tokens.size()) ||
        item.labels.cols() != static_cast<Eigen::Index>(model.labels.num_tags())) {
      throw std::invalid_argument("soft label shape does not match its sentence");
    }
  }

  const bool train_encoder = !config.freeze_encoder;
  const double lambda = config.lambda_u;
  auto objective = [&](const Checkpoint &m) {
    double labeled = 0.0;
    size_t labeled_tokens = 0;
    for (size_t i = 0; i < corpus.sentences.size(); ++i) {
      labeled += AccumulateLinearLoss(m, corpus.sentences[i].tokens, targets[i], 1.0, nullptr);
      labeled_tokens += corpus.sentences[i].size();
    }
    double value = labeled / static_cast<double>(labeled_tokens);
    if (!soft.empty()) {
      double unlabeled = 0.0;
      size_t unlabeled_tokens = 0;
      for (const SoftLabeledSentence &item : soft) {
        unlabeled += AccumulateLinearLoss(m, item.tokens, item.labels, 1.0, nullptr);
        unlabeled_tokens += item.tokens.size();
      }
      value += lambda * unlabeled / static_cast<double>(unlabeled_tokens);
    }
    return value;
  };

  TrainResult result;
  result.loss_history.push_back(objective(model));
  if (config.epochs == 0) {
    result.model = std::move(model);
    return result;
  }

  const int64_t n = static_cast<int64_t>(corpus.sentences.size());
  const int64_t steps_per_epoch = CeilDiv(n, config.batch_size);
  const int64_t soft_per_step =
      soft.empty() ? 0 : CeilDiv(static_cast<int64_t>(soft.size()), steps_per_epoch);
  OptimizerState optimizer(config.learning_rate, config.warmup_fraction,
                           steps_per_epoch * config.epochs);
  std::mt19937_64 labeled_rng(config.seed + kShuffleSeedOffset);
  std::mt19937_64 soft_rng(config.seed + kUnlabeledSeedOffset);

  std::vector<size_t> order(corpus.sentences.size());
  std::vector<size_t> soft_order(soft.size());
  ModelGrads grads = ModelGrads::ZerosLike(model);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), labeled_rng);
    std::iota(soft_order.begin(), soft_order.end(), 0);
    std::shuffle(soft_order.begin(), soft_order.end(), soft_rng);

    for (int64_t step = 0; step < steps_per_epoch; ++step) {
      grads.SetZero();
      const size_t begin = static_cast<size_t>(step * config.batch_size);
      const size_t end = std::min(order.size(), begin + config.batch_size);
      size_t batch_tokens = 0;
      for (size_t k = begin; k < end; ++k) batch_tokens += corpus.sentences[order[k]].size();
      for (size_t k = begin; k < end; ++k) {
        const size_t idx = order[k];
        AccumulateLinearLoss(model, corpus.sentences[idx].tokens, targets[idx],
                             1.0 / static_cast<double>(batch_tokens), &grads, train_encoder);
      }

      const size_t soft_begin = std::min(soft.size(), static_cast<size_t>(step * soft_per_step));
      const size_t soft_end = std::min(soft.size(), soft_begin + soft_per_step);
      size_t soft_tokens = 0;
      for (size_t k = soft_begin; k < soft_end; ++k) {
        soft_tokens += soft[soft_order[k]].tokens.size();
      }
      for (size_t k = soft_begin; k < soft_end; ++k) {
        const SoftLabeledSentence &item = soft[soft_order[k]];
        AccumulateLinearLoss(model, item.tokens, item.labels,
                             lambda / static_cast<double>(soft_tokens), &grads,
                             train_encoder);
      }

      std::vector<ParamBlock> blocks = LinearBlocks(&model, grads, train_encoder);
      optimizer.AdamStep(blocks);
    }
    result.loss_history.push_back(objective(model));
  }
  result.model = std::move(model);
  return result;
}

}  // namespace

Sentences TokensOf(const TaggedCorpus &corpus) {
  Sentences out;
  out.reserve(corpus.sentences.size());
  for (const TokenSequence &sentence : corpus.sentences) out.push_back(sentence.tokens);
  return out;
}

Checkpoint InitLinearModel(const Vocabulary &vocab, const LabelSet &labels,
                           const TrainConfig &config) {
  Checkpoint model;
  model.encoder = InitEncoder(vocab, config.embed_dim, config.hidden_dim, config.seed);
  model.labels = labels;
  model.head_kind = HeadKind::kLinear;
  model.linear = InitLinearHead(static_cast<int>(labels.num_tags()), config.hidden_dim,
                                config.seed + kHeadSeedOffset);
  return model;
}

Checkpoint WithFreshLinearHead(const Checkpoint &base, const LabelSet &labels,
                               uint64_t head_seed) {
  Checkpoint model;
  model.encoder = base.encoder;
  model.labels = labels;
  model.head_kind = HeadKind::kLinear;
  model.linear = InitLinearHead(static_cast<int>(labels.num_tags()),
                                base.encoder.hidden_dim, head_seed);
  return model;
}

Checkpoint AsPrototypeModel(const Checkpoint &base, const LabelSet &labels) {
  Checkpoint model;
  model.encoder = base.encoder;
  model.labels = labels;
  model.head_kind = HeadKind::kPrototype;
  return model;
}

Matrix OneHotTargets(const LabelSet &labels, const std::vector<std::string> &tags) {
  Matrix targets = Matrix::Zero(static_cast<Eigen::Index>(tags.size()),
                                static_cast<Eigen::Index>(labels.num_tags()));
  for (size_t i = 0; i < tags.size(); ++i) {
    int idx = labels.TagIndex(tags[i]);
    if (idx < 0) throw DataError("tag '" + tags[i] + "' is not in the model's tag vocabulary");
    targets(static_cast<Eigen::Index>(i), idx) = 1.0;
  }
  return targets;
}

ModelGrads ModelGrads::ZerosLike(const Checkpoint &model) {
  return {EncoderGrads::ZerosLike(model.encoder), LinearHeadGrads::ZerosLike(model.linear)};
}

void ModelGrads::SetZero() {
  encoder.SetZero();
  head.SetZero();
}

double AccumulateLinearLoss(const Checkpoint &model, const std::vector<std::string> &tokens,
                            const Matrix &targets, double scale, ModelGrads *grads,
                            bool include_encoder) {
  EncodedSentence encoded = EncodeWithCache(model.encoder, tokens);
  Matrix logits = encoded.reprs * model.linear.weights.transpose();
  logits.rowwise() += model.linear.bias.transpose();

  // Log-softmax keeps the loss finite when a probability underflows.
  Matrix probs(logits.rows(), logits.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double max = logits.row(i).maxCoeff();
    const double log_norm = max + std::log((logits.row(i).array() - max).exp().sum());
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      const double log_p = logits(i, j) - log_norm;
      probs(i, j) = std::exp(log_p);
      const double t = targets(i, j);
      if (t > 0.0) loss += t * (std::log(t) - log_p);
    }
  }
  if (grads == nullptr) return loss;

  Matrix logit_grad = scale * (probs - targets);
  grads->head.weights.noalias() += logit_grad.transpose() * encoded.reprs;
  grads->head.bias += logit_grad.colwise().sum().transpose();
  if (include_encoder) {
    Matrix upstream = logit_grad * model.linear.weights;
    AccumulateEncodeBackward(model.encoder, encoded, upstream, &grads->encoder);
  }
  return loss;
}

double MeanLinearLoss(const Checkpoint &model, const TaggedCorpus &corpus) {
  double total = 0.0;
  size_t tokens = 0;
  for (const TokenSequence &sentence : corpus.sentences) {
    total += AccumulateLinearLoss(model, sentence.tokens,
                                  OneHotTargets(model.labels, sentence.tags), 1.0, nullptr);
    tokens += sentence.size();
  }
  return tokens == 0 ? 0.0 : total / static_cast<double>(tokens);
}

SoftLabelDataset GenerateSoftLabels(const Checkpoint &teacher, const Sentences &sentences) {
  if (teacher.head_kind != HeadKind::kLinear) {
    throw std::invalid_argument("soft labels require a teacher with a linear head");
  }
  SoftLabelDataset out;
  out.reserve(sentences.size());
  for (const auto &tokens : sentences) {
    if (tokens.empty()) continue;
    Matrix reprs = Encode(teacher.encoder, tokens);
    Matrix labels(reprs.rows(), teacher.linear.num_tags());
    for (Eigen::Index i = 0; i < reprs.rows(); ++i) {
      labels.row(i) = LinearForward(teacher.linear, reprs.row(i).transpose()).probs.transpose();
    }
    out.push_back({tokens, std::move(labels)});
  }
  return out;
}

TrainResult TrainLinear(const TaggedCorpus &corpus, const TrainConfig &config,
                        const Checkpoint *init) {
  if (init != nullptr) {
    CheckLinearInit(*init, corpus.labels);
    return RunLinearTraining(corpus, {}, config, *init);
  }
  if (corpus.sentences.empty()) throw std::invalid_argument("empty training corpus");
  return RunLinearTraining(
      corpus, {}, config,
      InitLinearModel(Vocabulary::FromSentences(TokensOf(corpus)), corpus.labels, config));
}

TrainResult TrainLinearWithSoftLabels(const TaggedCorpus &corpus, const SoftLabelDataset &soft,
                                      const TrainConfig &config, const Checkpoint &init) {
  CheckLinearInit(init, corpus.labels);
  return RunLinearTraining(corpus, soft, config, init);
}

double EpisodeLoss(const EncoderParams &encoder, const TaggedCorpus &corpus,
                   const Episode &episode, EncoderGrads *grads) {
  const LabelSet &labels = corpus.labels;
  const Schema schema = labels.schema();
  std::set<std::string> in_episode(episode.types.begin(), episode.types.end());
  TagParts parts;
  auto episode_label = [&](const std::string &tag) {
    if (!SplitTag(tag, schema, &parts) || parts.prefix == 'O' || !in_episode.count(parts.type)) {
      return 0;
    }
    return labels.TagIndex(tag);
  };

  // Support representations grouped by label, remembering where each came from.
  std::vector<EncodedSentence> support_enc;
  SupportReprs support;
  std::map<int, std::vector<std::pair<size_t, Eigen::Index>>> provenance;
  for (size_t s = 0; s < episode.support.size(); ++s) {
    const TokenSequence &sentence = corpus.sentences[episode.support[s]];
    support_enc.push_back(EncodeWithCache(encoder, sentence.tokens));
    for (size_t i = 0; i < sentence.size(); ++i) {
      int label = episode_label(sentence.tags[i]);
      const auto row = static_cast<Eigen::Index>(i);
      support[label].push_back(support_enc.back().reprs.row(row).transpose());
      provenance[label].emplace_back(s, row);
    }
  }
  PrototypeSet protos = BuildPrototypes(support);

  std::vector<EncodedSentence> query_enc;
  std::vector<std::vector<int>> query_targets;
  size_t scored = 0;
  for (size_t q : episode.query) {
    const TokenSequence &sentence = corpus.sentences[q];
    query_enc.push_back(EncodeWithCache(encoder, sentence.tokens));
    std::vector<int> positions;
    for (const std::string &tag : sentence.tags) {
      positions.push_back(protos.Position(episode_label(tag)));
      if (positions.back() >= 0) ++scored;
    }
    query_targets.push_back(std::move(positions));
  }
  if (scored == 0) return 0.0;

  const double scale = 1.0 / static_cast<double>(scored);
  const Eigen::Index num_protos = static_cast<Eigen::Index>(protos.size());
  std::vector<Vector> centroid_grads(protos.size(), Vector::Zero(encoder.hidden_dim));
  double loss = 0.0;
  for (size_t s = 0; s < query_enc.size(); ++s) {
    Matrix upstream = Matrix::Zero(query_enc[s].reprs.rows(), encoder.hidden_dim);
    for (Eigen::Index i = 0; i < query_enc[s].reprs.rows(); ++i) {
      const int pos = query_targets[s][static_cast<size_t>(i)];
      if (pos < 0) continue;
      Vector repr = query_enc[s].reprs.row(i).transpose();
      Distribution target = Distribution::OneHot(num_protos, pos);
      loss += CrossEntropy(ProtoForward(protos, repr), target);
      if (grads != nullptr) {
        upstream.row(i) =
            AccumulateProtoBackward(protos, repr, target, scale, &centroid_grads).transpose();
      }
    }
    if (grads != nullptr) AccumulateEncodeBackward(encoder, query_enc[s], upstream, grads);
  }

  if (grads != nullptr) {
    std::vector<Matrix> support_upstream;
    for (const EncodedSentence &enc : support_enc) {
      support_upstream.push_back(Matrix::Zero(enc.reprs.rows(), encoder.hidden_dim));
    }
    for (const auto &[label, sources] : provenance) {
      const int pos = protos.Position(label);
      Vector share = centroid_grads[static_cast<size_t>(pos)] /
                     static_cast<double>(sources.size());
      for (const auto &[s, row] : sources) support_upstream[s].row(row) += share.transpose();
    }
    for (size_t s = 0; s < support_enc.size(); ++s) {
      AccumulateEncodeBackward(encoder, support_enc[s], support_upstream[s], grads);
    }
  }
  return loss * scale;
}

TrainResult TrainPrototype(const TaggedCorpus &corpus, const TrainConfig &config,
                           const Checkpoint *init) {
  config.Validate();
  if (corpus.sentences.empty()) throw std::invalid_argument("empty training corpus");
  if (corpus.labels.entity_types().empty()) {
    throw DataError("episodic training needs at least one entity type");
  }
  Checkpoint model;
  if (init != nullptr) {
    model = AsPrototypeModel(*init, corpus.labels);
  } else {
    model.encoder = InitEncoder(Vocabulary::FromSentences(TokensOf(corpus)), config.embed_dim,
                                config.hidden_dim, config.seed);
    model.labels = corpus.labels;
    model.head_kind = HeadKind::kPrototype;
  }

  const int num_types =
      std::min<int>(config.episode_types, static_cast<int>(corpus.labels.entity_types().size()));
  const int64_t per_episode =
      static_cast<int64_t>(num_types) * (config.support_shots + config.query_shots);
  const int64_t total = CeilDiv(
      static_cast<int64_t>(config.epochs) * static_cast<int64_t>(corpus.sentences.size()),
      per_episode);

  TrainResult result;
  EpisodeSampler sampler(corpus);
  std::mt19937_64 rng(config.seed + kEpisodeSeedOffset);
  if (total == 0) {
    std::mt19937_64 probe_rng = rng;
    Episode probe =
        sampler.Sample(num_types, config.support_shots, config.query_shots, probe_rng);
    result.loss_history.push_back(EpisodeLoss(model.encoder, corpus, probe, nullptr));
    result.model = std::move(model);
    return result;
  }

  OptimizerState optimizer(config.learning_rate, config.warmup_fraction, total);
  EncoderGrads grads = EncoderGrads::ZerosLike(model.encoder);
  double epoch_sum = 0.0;
  int64_t epoch_count = 0;
  int epoch = 1;
  for (int64_t iter = 0; iter < total; ++iter) {
    Episode episode = sampler.Sample(num_types, config.support_shots, config.query_shots, rng);
    grads.SetZero();
    double loss = EpisodeLoss(model.encoder, corpus, episode, &grads);
    if (iter == 0) result.loss_history.push_back(loss);
    epoch_sum += loss;
    ++epoch_count;
    if (!config.freeze_encoder) {
      std::vector<ParamBlock> blocks{
          MakeBlock("encoder.embeddings", model.encoder.embeddings, grads.embeddings),
          MakeBlock("encoder.context_weights", model.encoder.weights, grads.weights),
          MakeBlock("encoder.context_bias", model.encoder.bias, grads.bias)};
      optimizer.AdamStep(blocks);
    }
    // Epoch e covers iterations [floor((e-1) total / epochs), floor(e total / epochs)).
    while (epoch <= config.epochs && iter + 1 == (total * epoch) / config.epochs) {
      result.loss_history.push_back(epoch_count > 0 ? epoch_sum / epoch_count : 0.0);
      epoch_sum = 0.0;
      epoch_count = 0;
      ++epoch;
    }
  }
  result.model = std::move(model);
  return result;
}

TransferResult PretrainTransfer(const TaggedCorpus &source, const TaggedCorpus &target,
                                const TrainConfig &config, HeadKind objective,
                                const Vocabulary *vocab) {
  Vocabulary shared;
  if (vocab != nullptr) {
    shared = *vocab;
  } else {
    Sentences all = TokensOf(source);
    Sentences target_tokens = TokensOf(target);
    all.insert(all.end(), target_tokens.begin(), target_tokens.end());
    shared = Vocabulary::FromSentences(all);
  }

  TransferResult result;
  TrainConfig target_config = config;
  target_config.seed = config.seed + kTargetStageSeedOffset;
  if (objective == HeadKind::kLinear) {
    Checkpoint source_init = InitLinearModel(shared, source.labels, config);
    result.source_stage = TrainLinear(source, config, &source_init);
    result.target_init = WithFreshLinearHead(result.source_stage.model, target.labels,
                                             target_config.seed + kHeadSeedOffset);
    result.target_stage = TrainLinear(target, target_config, &result.target_init);
  } else {
    Checkpoint source_init;
    source_init.encoder =
        InitEncoder(shared, config.embed_dim, config.hidden_dim, config.seed);
    source_init.labels = source.labels;
    source_init.head_kind = HeadKind::kPrototype;
    result.source_stage = TrainPrototype(source, config, &source_init);
    result.target_init = AsPrototypeModel(result.source_stage.model, target.labels);
    result.target_stage = TrainPrototype(target, target_config, &result.target_init);
  }
  return result;
}

SelfTrainResult SelfTrain(const TaggedCorpus &labeled, const Sentences &unlabeled,
                          const TrainConfig &config, const Checkpoint *base) {
  if (labeled.sentences.empty()) throw std::invalid_argument("empty labeled corpus");
  SelfTrainResult result;
  if (base != nullptr) {
    result.student_init =
        WithFreshLinearHead(*base, labeled.labels, config.seed + kHeadSeedOffset);
    result.teacher = TrainLinear(labeled, config, &result.student_init);
  } else {
    result.teacher = TrainLinear(labeled, config);
    Sentences all = TokensOf(labeled);
    all.insert(all.end(), unlabeled.begin(), unlabeled.end());
    result.student_init = InitLinearModel(Vocabulary::FromSentences(all), labeled.labels, config);
  }
  result.soft_labels = GenerateSoftLabels(result.teacher.model, unlabeled);
  result.student =
      TrainLinearWithSoftLabels(labeled, result.soft_labels, config, result.student_init);
  return result;
}

}  // namespace fewner
