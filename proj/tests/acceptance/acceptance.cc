// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Optional arguments select criteria by
// name.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.h"
#include "fewner/evaluation.h"
#include "fewner/heads.h"
#include "fewner/optimizer.h"
#include "fewner/pipeline.h"
#include "fewner/training.h"
#include "support/gradcheck.h"
#include "support/synthetic.h"

namespace fewner {
namespace {

using testing::CheckGradient;
using testing::GradCheckResult;

struct Outcome {
  bool pass = false;
  std::string detail;
};

Vector RandomVector(int n, std::mt19937_64 &rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

Distribution RandomDistribution(int n, std::mt19937_64 &rng) {
  return Softmax(RandomVector(n, rng, 2.0));
}

std::span<double> Span(Matrix &m) { return {m.data(), static_cast<size_t>(m.size())}; }
std::span<double> Span(Vector &v) { return {v.data(), static_cast<size_t>(v.size())}; }
std::span<const double> CSpan(const Matrix &m) {
  return {m.data(), static_cast<size_t>(m.size())};
}
std::span<const double> CSpan(const Vector &v) {
  return {v.data(), static_cast<size_t>(v.size())};
}

// Tracks the worst case over many gradient checks.
struct GradTally {
  int cases = 0;
  int failures = 0;
  double worst_abs = 0.0;
  double worst_rel = 0.0;
  std::string first_failure;

  void Add(const GradCheckResult &r) {
    worst_abs = std::max(worst_abs, r.worst_abs);
    worst_rel = std::max(worst_rel, r.worst_rel);
    if (!r.ok) {
      if (failures == 0) first_failure = r.detail;
      ++failures;
    }
  }
  std::string Summary(const std::string &name) const {
    std::ostringstream s;
    s << name << " " << cases << " cases, worst abs " << worst_abs << " rel " << worst_rel;
    if (failures > 0) s << ", " << failures << " failed (" << first_failure << ")";
    return s.str();
  }
};

Outcome GradientCorrectness() {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 6);
  GradTally linear, proto, encoder;

  for (int c = 0; c < 100; ++c, ++linear.cases) {
    const int tags = dim(rng) + 1;
    const int h = dim(rng);
    LinearHead head{RandomVector(tags * h, rng).reshaped<Eigen::RowMajor>(tags, h), RandomVector(tags, rng)};
    Vector z = RandomVector(h, rng);
    Distribution target = RandomDistribution(tags, rng);
    LinearBackwardResult g = LinearBackward(head, z, target);
    auto loss = [&] { return CrossEntropy(LinearForward(head, z), target); };
    linear.Add(CheckGradient(Span(head.weights), CSpan(g.head.weights), loss, "W"));
    linear.Add(CheckGradient(Span(head.bias), CSpan(g.head.bias), loss, "b"));
    linear.Add(CheckGradient(Span(z), CSpan(g.repr), loss, "z"));
  }

  for (int c = 0; c < 100; ++c, ++proto.cases) {
    const int labels = dim(rng) + 1;
    const int h = dim(rng);
    std::vector<PrototypeEntry> entries;
    for (int l = 0; l < labels; ++l) entries.push_back({2 * l, {RandomVector(h, rng)}});
    PrototypeSet protos(entries);
    Vector z = RandomVector(h, rng);
    Distribution target = RandomDistribution(labels, rng);
    ProtoGrads g = ProtoBackward(protos, z, target);
    auto loss = [&] { return CrossEntropy(ProtoForward(protos, z), target); };
    proto.Add(CheckGradient(Span(z), CSpan(g.repr), loss, "z"));
    for (int l = 0; l < labels; ++l) {
      // Centroids are perturbed through a mutable copy of the entry list.
      auto perturbed = [&] {
        return CrossEntropy(ProtoForward(PrototypeSet(entries), z), target);
      };
      proto.Add(CheckGradient(Span(entries[l].centroids[0]), CSpan(g.centroids[l]), perturbed,
                              "c" + std::to_string(l)));
    }
  }

  for (int c = 0; c < 100; ++c, ++encoder.cases) {
    Vocabulary vocab({"a", "b", "c", "d"});
    EncoderParams params = InitEncoder(vocab, dim(rng), dim(rng), rng());
    params.embeddings = RandomVector(params.embeddings.size(), rng)
                            .reshaped<Eigen::RowMajor>(params.embeddings.rows(),
                                                       params.embeddings.cols());
    params.bias = RandomVector(params.hidden_dim, rng, 0.3);
    std::vector<std::string> tokens;
    const int length = std::uniform_int_distribution<int>(1, 5)(rng);
    for (int i = 0; i < length; ++i) {
      tokens.push_back(std::string(1, "abcdz"[std::uniform_int_distribution<int>(0, 4)(rng)]));
    }
    Matrix upstream = RandomVector(length * params.hidden_dim, rng)
                          .reshaped<Eigen::RowMajor>(length, params.hidden_dim);
    EncoderGrads g = EncodeBackward(params, tokens, upstream);
    auto loss = [&] { return (Encode(params, tokens).array() * upstream.array()).sum(); };
    encoder.Add(CheckGradient(Span(params.embeddings), CSpan(g.embeddings), loss, "embeddings"));
    encoder.Add(CheckGradient(Span(params.weights), CSpan(g.weights), loss, "weights"));
    encoder.Add(CheckGradient(Span(params.bias), CSpan(g.bias), loss, "bias"));
  }

  Outcome out;
  out.pass = linear.failures == 0 && proto.failures == 0 && encoder.failures == 0;
  out.detail = linear.Summary("linear") + "; " + proto.Summary("prototype") + "; " +
               encoder.Summary("encoder");
  return out;
}

// Brute-force chunk set: every span that forms a chunk under the schema.
std::set<Chunk> OracleChunks(const std::vector<std::string> &tags, Schema schema) {
  auto type_of = [&](size_t i) -> std::string {
    return tags[i] == "O" ? "" : tags[i].substr(2);
  };
  auto is_b = [&](size_t i) { return tags[i].rfind("B-", 0) == 0; };
  std::set<Chunk> out;
  const size_t n = tags.size();
  for (size_t i = 0; i < n; ++i) {
    const std::string type = type_of(i);
    if (type.empty()) continue;
    const bool starts = i == 0 || is_b(i) || type_of(i - 1) != type;
    if (!starts) continue;
    for (size_t j = i + 1; j <= n; ++j) {
      bool inside = true;
      for (size_t k = i + 1; k < j; ++k) {
        if (type_of(k) != type || is_b(k)) inside = false;
      }
      if (!inside) break;
      const bool ends = j == n || type_of(j) != type || (schema == Schema::kBio && is_b(j));
      if (ends) out.insert({type, static_cast<int>(i), static_cast<int>(j)});
    }
  }
  return out;
}

Outcome F1OracleEquivalence() {
  std::mt19937_64 rng(23);
  const std::vector<std::string> all_types = {"A", "B", "C", "D", "E", "F"};
  int mismatches = 0;
  std::string first;
  for (int c = 0; c < 1000; ++c) {
    const Schema schema = c % 2 == 0 ? Schema::kBio : Schema::kIo;
    const int n_types = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<std::string> types(all_types.begin(), all_types.begin() + n_types);
    const size_t length = std::uniform_int_distribution<size_t>(1, 40)(rng);
    std::vector<std::string> gold = testing::RandomTags(length, types, schema, rng);
    std::vector<std::string> pred = testing::RandomTags(length, types, schema, rng);
    TaggedCorpus corpus{{TokenSequence{std::vector<std::string>(length, "x"), gold}},
                        LabelSet(types, schema)};
    EvalReport report = EntityF1(corpus, {pred}, schema);

    std::set<Chunk> g = OracleChunks(gold, schema);
    std::set<Chunk> p = OracleChunks(pred, schema);
    size_t correct = 0;
    for (const Chunk &chunk : p) correct += g.count(chunk);
    const double precision = p.empty() ? 0.0 : static_cast<double>(correct) / p.size();
    const double recall = g.empty() ? 0.0 : static_cast<double>(correct) / g.size();
    const double f1 =
        precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    bool same = report.counts.gold == g.size() && report.counts.predicted == p.size() &&
                report.counts.correct == correct && report.precision == precision &&
                report.recall == recall && report.f1 == f1;
    if (!same) {
      if (mismatches == 0) first = "case " + std::to_string(c);
      ++mismatches;
    }
  }
  return {mismatches == 0,
          "1000 cases, " + std::to_string(mismatches) + " mismatches" +
              (first.empty() ? "" : " (first " + first + ")")};
}

Outcome NearestNeighborConsistency() {
  std::mt19937_64 rng(31);
  int mismatches = 0;
  int ties = 0;
  for (int c = 0; c < 1000; ++c) {
    const int n = std::uniform_int_distribution<int>(1, 8)(rng);
    const int h = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<int> labels(20);
    std::iota(labels.begin(), labels.end(), 0);
    std::shuffle(labels.begin(), labels.end(), rng);
    labels.resize(n);
    std::vector<PrototypeEntry> entries;
    for (int label : labels) entries.push_back({label, {RandomVector(h, rng)}});
    // Duplicate centroids create exact distance ties.
    if (n > 1 && c % 4 == 0) entries[1].centroids[0] = entries[0].centroids[0];
    Vector z = c % 7 == 0 ? entries[0].centroids[0] : RandomVector(h, rng);
    PrototypeSet protos(entries);

    int expected = -1;
    double best = 0.0;
    for (size_t i = 0; i < protos.size(); ++i) {
      const double d = (z - protos.entries()[i].centroids[0]).norm();
      if (expected < 0 || d < best) {
        expected = static_cast<int>(i);
        best = d;
      } else if (d == best) {
        ++ties;
      }
    }
    if (ProtoForward(protos, z).Argmax() != expected) ++mismatches;
  }
  return {mismatches == 0, "1000 cases (" + std::to_string(ties) + " exact ties), " +
                               std::to_string(mismatches) + " mismatches"};
}

TrainConfig DeskConfig(DataSetting setting, uint64_t seed) {
  TrainConfig config = TrainConfig::ForSetting(setting);
  config.learning_rate = setting == DataSetting::kFewShot ? 3e-2 : 1e-2;
  config.seed = seed;
  return config;
}

Outcome ReductionIdentities() {
  testing::TransferData data = testing::MakeTransferData(5);
  TaggedCorpus labeled = SampleFewShot(data.target_pool, 5, 5);
  Sentences unlabeled(data.unlabeled_pool.begin(), data.unlabeled_pool.begin() + 100);
  TrainConfig config = DeskConfig(DataSetting::kFewShot, 17);
  config.lambda_u = 0.0;
  SelfTrainResult st = SelfTrain(labeled, unlabeled, config);
  TrainResult supervised = TrainLinear(labeled, config, &st.student_init);
  const bool bitwise = SerializeCheckpoint(st.student.model) ==
                           SerializeCheckpoint(supervised.model) &&
                       st.student.loss_history == supervised.loss_history;

  std::mt19937_64 rng(41);
  double worst = 0.0;
  for (int c = 0; c < 200; ++c) {
    SupportReprs support;
    const int h = 4;
    for (int label = 0; label < 4; ++label) {
      const int n = std::uniform_int_distribution<int>(1, 12)(rng);
      for (int i = 0; i < n; ++i) support[label].push_back(RandomVector(h, rng));
    }
    PrototypeSet single = BuildPrototypes(support);
    for (int shots = 1; shots <= 5; ++shots) {
      PrototypeSet multi = BuildMultiPrototypes(support, shots, rng());
      Vector z = RandomVector(h, rng);
      worst = std::max(worst, (MultiProtoScore(multi, z).probs - ProtoForward(single, z).probs)
                                  .cwiseAbs()
                                  .maxCoeff());
    }
  }
  std::ostringstream detail;
  detail << "lambda_u=0 student " << (bitwise ? "bitwise equal" : "differs")
         << " to supervised training; K<=5 multi vs single max diff " << worst;
  return {bitwise && worst <= 1e-12, detail.str()};
}

Outcome ScheduleShape() {
  const int64_t total = 1000;
  const double base = 3e-4;
  const double warmup = 0.1;
  // Ramp to the peak at 10%, then linear decay: 500 of the 900 decay steps
  // remain at the midpoint.
  const std::vector<std::pair<int64_t, double>> expected = {
      {0, 0.0}, {100, base}, {500, base * (5.0 / 9.0)}, {1000, 0.0}};
  bool ok = true;
  std::ostringstream detail;
  for (const auto &[step, lr] : expected) {
    const double got = ScheduledLearningRate(step, total, base, warmup);
    ok = ok && got == lr;
    detail << step << ":" << got << " ";
  }
  // The optimizer reads the same schedule at its current step.
  OptimizerState state(base, warmup, total);
  Vector x = Vector::Zero(1);
  Vector g = Vector::Ones(1);
  std::vector<ParamBlock> blocks = {MakeBlock("x", x, g)};
  for (int64_t s = 0; s < total; ++s) {
    if (s == 0 || s == 100 || s == 500) {
      ok = ok && state.LearningRate() == ScheduledLearningRate(s, total, base, warmup);
    }
    state.AdamStep(blocks);
  }
  ok = ok && state.LearningRate() == 0.0;
  return {ok, detail.str() + "(1000-step plan, warmup 10%)"};
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Outcome SyntheticLearnability() {
  const auto start = std::chrono::steady_clock::now();
  testing::LearnabilityData data = testing::MakeLearnabilityData(7);
  std::set<std::string> words;
  for (const TaggedCorpus *c : {&data.train, &data.test}) {
    for (const TokenSequence &s : c->sentences) words.insert(s.tokens.begin(), s.tokens.end());
  }
  TrainConfig config = DeskConfig(DataSetting::kFull, 7);
  config.epochs = 10;
  SchemeRun run = RunScheme(Scheme::kLc, {&data.train}, config);
  EvalReport report = EvaluateModel(run.model, data.test, Schema::kBio);
  const double seconds = Seconds(start);
  std::ostringstream detail;
  detail << "vocabulary " << words.size() << ", F1 " << report.f1 << " after " << config.epochs
         << " epochs, " << seconds << " s";
  return {report.f1 >= 0.95 && seconds < 120.0, detail.str()};
}

Outcome FewShotOrdering() {
  const auto start = std::chrono::steady_clock::now();
  testing::TransferData data = testing::MakeTransferData(3);
  std::vector<double> lc, nsp, st;
  int nsp_wins = 0;
  int st_wins = 0;
  std::ostringstream runs;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    TaggedCorpus sample = SampleFewShot(data.target_pool, 5, seed);
    std::mt19937_64 rng(seed);
    Sentences pool = data.unlabeled_pool;
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min(pool.size(), 20 * sample.sentences.size()));
    TrainConfig config = DeskConfig(DataSetting::kFewShot, seed);
    auto f1 = [&](Scheme scheme) {
      SchemeRun run = RunScheme(scheme, {&sample, &data.source, &pool}, config);
      return EvaluateModel(run.model, data.target_test, Schema::kBio).f1;
    };
    lc.push_back(f1(Scheme::kLc));
    nsp.push_back(f1(Scheme::kLcNsp));
    st.push_back(f1(Scheme::kLcSt));
    nsp_wins += nsp.back() >= lc.back();
    st_wins += st.back() >= lc.back();
    runs << " [" << lc.back() << " " << nsp.back() << " " << st.back() << "]";
  }
  const double seconds = Seconds(start);
  auto mean = [](const std::vector<double> &v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  std::ostringstream detail;
  detail << "mean F1 lc " << mean(lc) << ", lc+nsp " << mean(nsp) << " (" << nsp_wins
         << "/10), lc+st " << mean(st) << " (" << st_wins << "/10), " << seconds << " s;"
         << runs.str();
  const bool ok = mean(nsp) >= mean(lc) && mean(st) >= mean(lc) && nsp_wins >= 7 &&
                  st_wins >= 7 && seconds < 900.0;
  return {ok, detail.str()};
}

Outcome TrainingFreeInference() {
  const auto start = std::chrono::steady_clock::now();
  testing::TrainingFreeData data = testing::MakeTrainingFreeData(9);
  TrainConfig config = DeskConfig(DataSetting::kFull, 9);
  config.episode_types = 4;
  Checkpoint init = AsPrototypeModel(InitLinearModel(data.world, data.train.labels, config),
                                     data.train.labels);
  TrainResult trained = TrainPrototype(data.train, config, &init);
  const std::string before = SerializeCheckpoint(trained.model);

  EvalReport report = EvaluatePrototypeInference(trained.model.encoder, data.support,
                                                 data.test, 10, Schema::kBio, 9);
  std::vector<std::vector<std::string>> all_o;
  for (const TokenSequence &s : data.test.sentences) {
    all_o.emplace_back(s.size(), "O");
  }
  const double baseline = EntityF1(data.test, all_o, Schema::kBio).f1;
  const bool untouched = SerializeCheckpoint(trained.model) == before;
  const double seconds = Seconds(start);
  std::ostringstream detail;
  detail << "F1 " << report.f1 << " vs all-O " << baseline << ", encoder "
         << (untouched ? "untouched" : "modified") << ", " << seconds << " s";
  return {report.f1 - baseline >= 0.3 && untouched && seconds < 60.0, detail.str()};
}

Outcome CliDeterminism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "fewner_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  testing::LearnabilityData data = testing::MakeLearnabilityData(13);
  std::ofstream(dir / "train.conll") << WriteConll(data.train);
  std::ofstream(dir / "config.json")
      << R"({"setting": "100%", "learning_rate": 0.01, "epochs": 3, "seed": 21})";
  std::vector<std::string> digests;
  std::ostringstream sink;
  for (const char *name : {"a.json", "b.json"}) {
    const int code = cli::RunCli({"fewner", "train", "--scheme", "lc", "--config",
                                  (dir / "config.json").string(), "--train",
                                  (dir / "train.conll").string(), "--out",
                                  (dir / name).string()},
                                 sink, sink);
    if (code != 0) return {false, "train exited with " + std::to_string(code) + ": " + sink.str()};
    digests.push_back(cli::FileSha256(dir / name));
  }
  fs::remove_all(dir);
  return {digests[0] == digests[1], "checkpoint sha256 " + digests[0].substr(0, 16) +
                                        (digests[0] == digests[1] ? " == " : " != ") +
                                        digests[1].substr(0, 16)};
}

}  // namespace
}  // namespace fewner

int main(int argc, char **argv) {
  using Criterion = std::pair<std::string, std::function<fewner::Outcome()>>;
  const std::vector<Criterion> criteria = {
      {"gradient_correctness", fewner::GradientCorrectness},
      {"f1_oracle_equivalence", fewner::F1OracleEquivalence},
      {"nearest_neighbor_consistency", fewner::NearestNeighborConsistency},
      {"reduction_identities", fewner::ReductionIdentities},
      {"schedule_shape", fewner::ScheduleShape},
      {"synthetic_learnability", fewner::SyntheticLearnability},
      {"few_shot_ordering", fewner::FewShotOrdering},
      {"training_free_inference", fewner::TrainingFreeInference},
      {"cli_determinism", fewner::CliDeterminism},
  };
  std::set<std::string> selected(argv + 1, argv + argc);
  int failures = 0;
  for (const auto &[name, run] : criteria) {
    if (!selected.empty() && !selected.count(name)) continue;
    fewner::Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception &e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (outcome.pass ? "PASS " : "FAIL ") << name << ": " << outcome.detail
              << std::endl;
    failures += !outcome.pass;
  }
  return failures == 0 ? 0 : 1;
}
