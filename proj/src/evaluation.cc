#include "fewner/evaluation.h"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace fewner {

std::vector<std::string> PredictTags(const Checkpoint &model,
                                     const std::vector<std::string> &tokens) {
  if (model.head_kind != HeadKind::kLinear) {
    throw std::invalid_argument("prototype checkpoints need a support set to predict");
  }
  if (model.linear.input_dim() != model.encoder.hidden_dim) {
    throw std::invalid_argument("linear head does not match the encoder dimension");
  }
  Matrix reprs = Encode(model.encoder, tokens);
  const auto &vocab = model.labels.tag_vocabulary();
  std::vector<std::string> tags;
  tags.reserve(tokens.size());
  for (Eigen::Index i = 0; i < reprs.rows(); ++i) {
    tags.push_back(vocab[LinearForward(model.linear, reprs.row(i).transpose()).Argmax()]);
  }
  return tags;
}

std::vector<std::string> PredictTags(const EncoderParams &encoder, const PrototypeSet &protos,
                                     const LabelSet &labels,
                                     const std::vector<std::string> &tokens) {
  if (protos.dim() != encoder.hidden_dim) {
    throw std::invalid_argument("prototype dimension does not match the encoder");
  }
  Matrix reprs = Encode(encoder, tokens);
  const auto &vocab = labels.tag_vocabulary();
  std::vector<std::string> tags;
  tags.reserve(tokens.size());
  for (Eigen::Index i = 0; i < reprs.rows(); ++i) {
    int pos = MultiProtoScore(protos, reprs.row(i).transpose()).Argmax();
    tags.push_back(vocab.at(protos.entries()[pos].label));
  }
  return tags;
}

SupportReprs CollectSupport(const EncoderParams &encoder, const TaggedCorpus &support,
                            const LabelSet &labels) {
  SupportReprs out;
  for (const TokenSequence &sentence : support.sentences) {
    Matrix reprs = Encode(encoder, sentence.tokens);
    for (size_t i = 0; i < sentence.size(); ++i) {
      int label = labels.TagIndex(sentence.tags[i]);
      if (label < 0) {
        throw DataError("support tag '" + sentence.tags[i] + "' is not in the label set");
      }
      out[label].push_back(reprs.row(static_cast<Eigen::Index>(i)).transpose());
    }
  }
  return out;
}

TypeScores ScoresFromCounts(size_t gold, size_t predicted, size_t correct) {
  TypeScores s;
  s.support = gold;
  s.precision = predicted == 0 ? 0.0 : static_cast<double>(correct) / predicted;
  s.recall = gold == 0 ? 0.0 : static_cast<double>(correct) / gold;
  s.f1 = s.precision + s.recall > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

EvalReport EntityF1(const TaggedCorpus &gold,
                    const std::vector<std::vector<std::string>> &predicted, Schema schema) {
  if (predicted.size() != gold.sentences.size()) {
    throw std::invalid_argument("prediction count " + std::to_string(predicted.size()) +
                                " does not match sentence count " +
                                std::to_string(gold.sentences.size()));
  }
  std::map<std::string, ChunkCounts> per_type;
  for (const std::string &type : gold.labels.entity_types()) per_type[type];
  ChunkCounts total;
  for (size_t s = 0; s < gold.sentences.size(); ++s) {
    const TokenSequence &sentence = gold.sentences[s];
    if (predicted[s].size() != sentence.size()) {
      throw std::invalid_argument("sentence " + std::to_string(s) + ": predicted " +
                                  std::to_string(predicted[s].size()) + " tags for " +
                                  std::to_string(sentence.size()) + " tokens");
    }
    std::vector<Chunk> gold_chunks =
        ExtractChunks(ConvertTags(sentence.tags, gold.labels.schema(), schema), schema);
    std::vector<Chunk> pred_chunks = ExtractChunks(predicted[s], schema);
    // Both lists are ordered by start and disjoint, so a merge finds matches.
    size_t g = 0;
    size_t p = 0;
    while (g < gold_chunks.size() && p < pred_chunks.size()) {
      if (gold_chunks[g] == pred_chunks[p]) {
        ++per_type[gold_chunks[g].type].correct;
        ++total.correct;
        ++g;
        ++p;
      } else if (std::tie(gold_chunks[g].start, gold_chunks[g].end) <
                 std::tie(pred_chunks[p].start, pred_chunks[p].end)) {
        ++g;
      } else {
        ++p;
      }
    }
    for (const Chunk &c : gold_chunks) ++per_type[c.type].gold;
    for (const Chunk &c : pred_chunks) ++per_type[c.type].predicted;
    total.gold += gold_chunks.size();
    total.predicted += pred_chunks.size();
  }

  EvalReport report;
  TypeScores overall = ScoresFromCounts(total.gold, total.predicted, total.correct);
  report.precision = overall.precision;
  report.recall = overall.recall;
  report.f1 = overall.f1;
  report.counts = total;
  for (const auto &[type, counts] : per_type) {
    report.per_type[type] = ScoresFromCounts(counts.gold, counts.predicted, counts.correct);
  }
  return report;
}

std::string EvalReportToJson(const EvalReport &report) {
  nlohmann::json doc;
  doc["precision"] = report.precision;
  doc["recall"] = report.recall;
  doc["f1"] = report.f1;
  doc["per_type"] = nlohmann::json::object();
  for (const auto &[type, s] : report.per_type) {
    doc["per_type"][type] = {
        {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
  }
  doc["counts"] = {{"gold", report.counts.gold},
                   {"predicted", report.counts.predicted},
                   {"correct", report.counts.correct}};
  return doc.dump(2);
}

AggregateReport Aggregate(std::vector<EvalReport> runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate needs at least one run");
  AggregateReport out;
  const double n = static_cast<double>(runs.size());
  double sum = 0.0;
  for (const EvalReport &r : runs) sum += r.f1;
  out.mean_f1 = sum / n;
  if (runs.size() > 1) {
    double sq = 0.0;
    for (const EvalReport &r : runs) sq += (r.f1 - out.mean_f1) * (r.f1 - out.mean_f1);
    out.std_f1 = std::sqrt(sq / (n - 1.0));
  }
  out.runs = std::move(runs);
  return out;
}

AggregateReport RepeatedEval(const std::function<EvalReport(uint64_t)> &experiment,
                             int n_repeats, uint64_t base_seed) {
  if (n_repeats < 1) throw std::invalid_argument("n_repeats must be at least 1");
  std::vector<EvalReport> runs;
  runs.reserve(static_cast<size_t>(n_repeats));
  for (int i = 0; i < n_repeats; ++i) runs.push_back(experiment(base_seed + i));
  return Aggregate(std::move(runs));
}

std::string FormatMeanStd(double mean, double std) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.3f ± %.3f", mean, std);
  return buffer;
}

std::string AggregateReportToJson(const AggregateReport &report) {
  nlohmann::json doc;
  doc["mean_f1"] = report.mean_f1;
  doc["std_f1"] = report.std_f1;
  doc["summary"] = FormatMeanStd(report.mean_f1, report.std_f1);
  doc["runs"] = nlohmann::json::array();
  for (const EvalReport &r : report.runs) {
    doc["runs"].push_back(nlohmann::json::parse(EvalReportToJson(r)));
  }
  return doc.dump(2);
}

}  // namespace fewner
