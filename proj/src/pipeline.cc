#include "fewner/pipeline.h"

#include <stdexcept>

namespace fewner {
namespace {

void Require(bool present, Scheme scheme, const char *what) {
  if (!present) {
    throw std::invalid_argument("scheme " + SchemeName(scheme) + " requires " + what);
  }
}

}  // namespace

SchemeRun RunScheme(Scheme scheme, const SchemeData &data, const TrainConfig &config) {
  Require(data.target != nullptr, scheme, "a labeled target corpus");
  if (UsesNoisyPretraining(scheme)) Require(data.source != nullptr, scheme, "a source corpus");
  if (UsesSelfTraining(scheme)) Require(data.unlabeled != nullptr, scheme, "unlabeled sentences");
  const TaggedCorpus &target = *data.target;

  SchemeRun run;
  switch (scheme) {
    case Scheme::kLc: {
      TrainResult r = TrainLinear(target, config);
      run.stages.push_back({"lc", r.loss_history});
      run.model = std::move(r.model);
      break;
    }
    case Scheme::kProto: {
      TrainResult r = TrainPrototype(target, config);
      run.stages.push_back({"proto", r.loss_history});
      run.model = std::move(r.model);
      break;
    }
    case Scheme::kLcNsp:
    case Scheme::kProtoNsp: {
      HeadKind objective = scheme == Scheme::kLcNsp ? HeadKind::kLinear : HeadKind::kPrototype;
      TransferResult r = PretrainTransfer(*data.source, target, config, objective);
      run.stages.push_back({"nsp", r.source_stage.loss_history});
      run.stages.push_back({scheme == Scheme::kLcNsp ? "lc" : "proto",
                            r.target_stage.loss_history});
      run.model = std::move(r.target_stage.model);
      break;
    }
    case Scheme::kLcSt: {
      SelfTrainResult r = SelfTrain(target, *data.unlabeled, config);
      run.stages.push_back({"teacher", r.teacher.loss_history});
      run.stages.push_back({"student", r.student.loss_history});
      run.model = std::move(r.student.model);
      break;
    }
    case Scheme::kLcNspSt: {
      // Stage 1 on the source with a vocabulary spanning every input.
      Sentences all = TokensOf(*data.source);
      Sentences target_tokens = TokensOf(target);
      all.insert(all.end(), target_tokens.begin(), target_tokens.end());
      all.insert(all.end(), data.unlabeled->begin(), data.unlabeled->end());
      Vocabulary vocab = Vocabulary::FromSentences(all);
      Checkpoint init = InitLinearModel(vocab, data.source->labels, config);
      TrainResult pretrained = TrainLinear(*data.source, config, &init);
      run.stages.push_back({"nsp", pretrained.loss_history});

      TrainConfig target_config = config;
      target_config.seed = config.seed + kTargetStageSeedOffset;
      SelfTrainResult r = SelfTrain(target, *data.unlabeled, target_config, &pretrained.model);
      run.stages.push_back({"teacher", r.teacher.loss_history});
      run.stages.push_back({"student", r.student.loss_history});
      run.model = std::move(r.student.model);
      break;
    }
  }
  return run;
}

EvalReport EvaluateModel(const Checkpoint &model, const TaggedCorpus &test, Schema schema,
                         const TaggedCorpus *support) {
  for (const std::string &type : test.labels.entity_types()) {
    if (!model.labels.HasType(type)) {
      throw DataError("test entity type '" + type + "' is unknown to the model");
    }
  }
  const Schema model_schema = model.labels.schema();
  std::vector<std::vector<std::string>> predicted;
  predicted.reserve(test.sentences.size());
  if (model.head_kind == HeadKind::kLinear) {
    for (const TokenSequence &sentence : test.sentences) {
      predicted.push_back(
          ConvertTags(PredictTags(model, sentence.tokens), model_schema, schema));
    }
  } else {
    if (support == nullptr) {
      throw std::invalid_argument("prototype models need a support corpus for evaluation");
    }
    PrototypeSet protos = BuildPrototypes(CollectSupport(model.encoder, *support, model.labels));
    for (const TokenSequence &sentence : test.sentences) {
      predicted.push_back(ConvertTags(
          PredictTags(model.encoder, protos, model.labels, sentence.tokens), model_schema,
          schema));
    }
  }
  return EntityF1(test, predicted, schema);
}

EvalReport EvaluatePrototypeInference(const EncoderParams &encoder, const TaggedCorpus &support,
                                      const TaggedCorpus &test, int shots, Schema schema,
                                      uint64_t seed) {
  for (const std::string &type : test.labels.entity_types()) {
    if (!support.labels.HasType(type)) {
      throw DataError("test entity type '" + type + "' has no support examples");
    }
  }
  const LabelSet &labels = support.labels;
  PrototypeSet protos =
      BuildMultiPrototypes(CollectSupport(encoder, support, labels), shots, seed);
  std::vector<std::vector<std::string>> predicted;
  predicted.reserve(test.sentences.size());
  for (const TokenSequence &sentence : test.sentences) {
    predicted.push_back(ConvertTags(PredictTags(encoder, protos, labels, sentence.tokens),
                                    labels.schema(), schema));
  }
  return EntityF1(test, predicted, schema);
}

EvalReport RunFewShot(const FewShotExperiment &experiment, uint64_t seed) {
  if (experiment.train == nullptr || experiment.test == nullptr) {
    throw std::invalid_argument("few-shot experiment needs train and test corpora");
  }
  TaggedCorpus sample = SampleFewShot(*experiment.train, experiment.shots, seed);
  TrainConfig config = experiment.config;
  config.seed = seed;
  SchemeRun run = RunScheme(experiment.scheme,
                            {&sample, experiment.source, experiment.unlabeled}, config);
  return EvaluateModel(run.model, *experiment.test, experiment.eval_schema, &sample);
}

AggregateReport RepeatedFewShot(const FewShotExperiment &experiment, int n_repeats,
                                uint64_t base_seed) {
  return RepeatedEval([&](uint64_t seed) { return RunFewShot(experiment, seed); }, n_repeats,
                      base_seed);
}

}  // namespace fewner
