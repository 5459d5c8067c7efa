#include "doctest.h"
#include "fewner/encoder.h"
#include "support/gradcheck.h"

#include <cmath>
#include <random>

namespace fewner {
namespace {

EncoderParams RandomParams(uint64_t seed) {
  EncoderParams params = InitEncoder(Vocabulary({"the", "cat", "sat", "on", "mat"}), 3, 4, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.5);
  for (double &x : params.bias) x = normal(rng);
  for (Eigen::Index i = 0; i < params.embeddings.size(); ++i) params.embeddings.data()[i] = normal(rng);
  return params;
}

TEST_CASE("Vocabulary reserves PAD and UNK") {
  Vocabulary vocab({"b", "a", "b", "<UNK>"});
  CHECK(vocab.entries() == std::vector<std::string>{"<PAD>", "<UNK>", "b", "a"});
  CHECK(vocab.Id("a") == 3);
  CHECK(vocab.Id("zzz") == Vocabulary::kUnk);
  CHECK(vocab.Id("<PAD>") == Vocabulary::kUnk);
  CHECK(Vocabulary::FromSentences({{"y", "x"}, {"x"}}).entries() ==
        std::vector<std::string>{"<PAD>", "<UNK>", "x", "y"});
}

TEST_CASE("InitEncoder shapes and determinism") {
  std::vector<std::string> words;
  for (int i = 0; i < 100; ++i) words.push_back("w" + std::to_string(i));
  EncoderParams a = InitEncoder(Vocabulary(words), 8, 16, 3);
  CHECK(a.embeddings.rows() == 102);
  CHECK(a.embeddings.cols() == 8);
  CHECK(a.weights.rows() == 16);
  CHECK(a.weights.cols() == 24);
  CHECK(a.bias.isZero());
  CHECK(a.embeddings.cwiseAbs().maxCoeff() <= 0.1);
  CHECK(InitEncoder(Vocabulary(words), 8, 16, 3) == a);
  CHECK_FALSE(InitEncoder(Vocabulary(words), 8, 16, 4) == a);
  CHECK_THROWS_AS(InitEncoder(Vocabulary(), 8, 16, 3), std::invalid_argument);
}

TEST_CASE("Encode with zero parameters gives zero representations") {
  EncoderParams params = InitEncoder(Vocabulary({"a"}), 2, 3, 1);
  params.embeddings.setZero();
  params.weights.setZero();
  CHECK(Encode(params, {"a", "b", "a"}).isZero());
}

TEST_CASE("Encode matches a hand-computed window expression") {
  EncoderParams params = RandomParams(7);
  const std::vector<std::string> tokens = {"cat", "dog", "mat"};
  Matrix reprs = Encode(params, tokens);
  const int e = params.embed_dim;
  for (int i = 0; i < 3; ++i) {
    int prev = i == 0 ? Vocabulary::kPad : params.vocab.Id(tokens[i - 1]);
    int cur = params.vocab.Id(tokens[i]);
    int next = i == 2 ? Vocabulary::kPad : params.vocab.Id(tokens[i + 1]);
    for (int h = 0; h < params.hidden_dim; ++h) {
      double pre = params.bias[h];
      for (int k = 0; k < e; ++k) {
        pre += params.weights(h, k) * params.embeddings(prev, k) +
               params.weights(h, e + k) * params.embeddings(cur, k) +
               params.weights(h, 2 * e + k) * params.embeddings(next, k);
      }
      CHECK(reprs(i, h) == doctest::Approx(std::tanh(pre)).epsilon(1e-14));
    }
  }
}

TEST_CASE("single-token sentence pads both context slots") {
  EncoderParams params = RandomParams(8);
  EncodedSentence cache = EncodeWithCache(params, {"on"});
  const int e = params.embed_dim;
  CHECK(cache.inputs.row(0).head(e).transpose() == params.embeddings.row(Vocabulary::kPad).transpose());
  CHECK(cache.inputs.row(0).tail(e).transpose() == params.embeddings.row(Vocabulary::kPad).transpose());
}

TEST_CASE("EncodeBackward with zero upstream is zero") {
  EncoderParams params = RandomParams(9);
  EncoderGrads g = EncodeBackward(params, {"the", "cat"}, Matrix::Zero(2, params.hidden_dim));
  CHECK(g.embeddings.isZero());
  CHECK(g.weights.isZero());
  CHECK(g.bias.isZero());
}

TEST_CASE("EncodeBackward leaves rows of absent words at zero") {
  EncoderParams params = RandomParams(10);
  Matrix upstream = Matrix::Ones(2, params.hidden_dim);
  EncoderGrads g = EncodeBackward(params, {"the", "cat"}, upstream);
  CHECK(g.embeddings.row(params.vocab.Id("mat")).isZero());
  CHECK(g.embeddings.row(Vocabulary::kUnk).isZero());
  CHECK_FALSE(g.embeddings.row(params.vocab.Id("cat")).isZero());
  CHECK_FALSE(g.embeddings.row(Vocabulary::kPad).isZero());
}

TEST_CASE("EncodeBackward matches finite differences") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    EncoderParams params = RandomParams(seed);
    const std::vector<std::string> tokens = {"the", "cat", "zebra", "the"};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Matrix upstream(4, params.hidden_dim);
    for (Eigen::Index i = 0; i < upstream.size(); ++i) upstream.data()[i] = normal(rng);
    EncoderGrads g = EncodeBackward(params, tokens, upstream);
    auto loss = [&] { return (Encode(params, tokens).array() * upstream.array()).sum(); };
    auto check = [&](auto &values, const auto &grads, const char *name) {
      auto r = testing::CheckGradient({values.data(), static_cast<size_t>(values.size())},
                                      {grads.data(), static_cast<size_t>(grads.size())}, loss,
                                      name);
      CHECK_MESSAGE(r.ok, r.detail);
    };
    check(params.embeddings, g.embeddings, "embeddings");
    check(params.weights, g.weights, "weights");
    check(params.bias, g.bias, "bias");
  }
}

TEST_CASE("the gradient checker rejects a wrong gradient") {
  std::vector<double> x = {1.0, 2.0};
  std::vector<double> wrong = {2.0, 5.0};
  auto loss = [&] { return x[0] * x[0] + x[1] * x[1]; };
  CHECK_FALSE(testing::CheckGradient(x, wrong, loss, "x").ok);
  std::vector<double> right = {2.0, 4.0};
  CHECK(testing::CheckGradient(x, right, loss, "x").ok);
}

}  // namespace
}  // namespace fewner
