#include "fewner/encoder.h"

#include <random>
#include <set>
#include <stdexcept>

namespace fewner {

Vocabulary::Vocabulary(const std::vector<std::string> &words) {
  index_[std::string(kPadToken)] = kPad;
  index_[std::string(kUnkToken)] = kUnk;
  for (const std::string &word : words) {
    if (index_.count(word)) continue;
    index_[word] = static_cast<int>(entries_.size());
    entries_.push_back(word);
  }
}

Vocabulary Vocabulary::FromSentences(
    const std::vector<std::vector<std::string>> &sentences) {
  std::set<std::string> words;
  for (const auto &tokens : sentences) words.insert(tokens.begin(), tokens.end());
  return Vocabulary(std::vector<std::string>(words.begin(), words.end()));
}

int Vocabulary::Id(std::string_view word) const {
  auto it = index_.find(word);
  // The reserved names only ever come from the table itself.
  if (it == index_.end() || it->second < 2) return kUnk;
  return it->second;
}

std::vector<int> Vocabulary::Ids(const std::vector<std::string> &tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string &token : tokens) ids.push_back(Id(token));
  return ids;
}

void EncoderParams::Validate() const {
  if (embed_dim < 1 || hidden_dim < 1) {
    throw std::invalid_argument("encoder dimensions must be positive");
  }
  if (embeddings.rows() != vocab.size() || embeddings.cols() != embed_dim ||
      weights.rows() != hidden_dim || weights.cols() != 3 * embed_dim ||
      bias.size() != hidden_dim) {
    throw std::invalid_argument("encoder parameter shapes do not match E=" +
                                std::to_string(embed_dim) +
                                ", H=" + std::to_string(hidden_dim));
  }
  if (!embeddings.allFinite() || !weights.allFinite() || !bias.allFinite()) {
    throw std::invalid_argument("encoder parameters contain non-finite values");
  }
}

bool EncoderParams::operator==(const EncoderParams &other) const {
  return vocab == other.vocab && embed_dim == other.embed_dim &&
         hidden_dim == other.hidden_dim && embeddings == other.embeddings &&
         weights == other.weights && bias == other.bias;
}

EncoderGrads EncoderGrads::ZerosLike(const EncoderParams &params) {
  EncoderGrads grads;
  grads.embeddings = Matrix::Zero(params.embeddings.rows(), params.embeddings.cols());
  grads.weights = Matrix::Zero(params.weights.rows(), params.weights.cols());
  grads.bias = Vector::Zero(params.bias.size());
  return grads;
}

void EncoderGrads::SetZero() {
  embeddings.setZero();
  weights.setZero();
  bias.setZero();
}

EncoderParams InitEncoder(const Vocabulary &vocab, int embed_dim, int hidden_dim,
                          uint64_t seed) {
  if (vocab.num_words() < 1) throw std::invalid_argument("empty vocabulary");
  if (embed_dim < 1 || hidden_dim < 1) {
    throw std::invalid_argument("encoder dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-0.1, 0.1);
  EncoderParams params;
  params.vocab = vocab;
  params.embed_dim = embed_dim;
  params.hidden_dim = hidden_dim;
  params.embeddings.resize(vocab.size(), embed_dim);
  for (Eigen::Index i = 0; i < params.embeddings.size(); ++i) {
    params.embeddings.data()[i] = uniform(rng);
  }
  params.weights.resize(hidden_dim, 3 * embed_dim);
  for (Eigen::Index i = 0; i < params.weights.size(); ++i) {
    params.weights.data()[i] = uniform(rng);
  }
  params.bias = Vector::Zero(hidden_dim);
  return params;
}

EncodedSentence EncodeWithCache(const EncoderParams &params,
                                const std::vector<std::string> &tokens) {
  EncodedSentence out;
  out.ids = params.vocab.Ids(tokens);
  const int length = static_cast<int>(out.ids.size());
  const int dim = params.embed_dim;
  out.inputs.resize(length, 3 * dim);
  for (int i = 0; i < length; ++i) {
    int prev = i > 0 ? out.ids[i - 1] : Vocabulary::kPad;
    int next = i + 1 < length ? out.ids[i + 1] : Vocabulary::kPad;
    out.inputs.row(i).segment(0, dim) = params.embeddings.row(prev);
    out.inputs.row(i).segment(dim, dim) = params.embeddings.row(out.ids[i]);
    out.inputs.row(i).segment(2 * dim, dim) = params.embeddings.row(next);
  }
  out.reprs = out.inputs * params.weights.transpose();
  out.reprs.rowwise() += params.bias.transpose();
  out.reprs = out.reprs.array().tanh();
  return out;
}

Matrix Encode(const EncoderParams &params, const std::vector<std::string> &tokens) {
  return EncodeWithCache(params, tokens).reprs;
}

void AccumulateEncodeBackward(const EncoderParams &params, const EncodedSentence &cache,
                              const Matrix &upstream, EncoderGrads *grads) {
  const Eigen::Index length = cache.reprs.rows();
  if (upstream.rows() != length || upstream.cols() != params.hidden_dim) {
    throw std::invalid_argument("upstream gradient shape does not match the sentence");
  }
  // d tanh(a) / da = 1 - tanh(a)^2
  Matrix pre_grad = upstream.array() * (1.0 - cache.reprs.array().square());
  grads->weights.noalias() += pre_grad.transpose() * cache.inputs;
  grads->bias.noalias() += pre_grad.colwise().sum().transpose();
  Matrix input_grad = pre_grad * params.weights;

  const int dim = params.embed_dim;
  for (Eigen::Index i = 0; i < length; ++i) {
    int prev = i > 0 ? cache.ids[i - 1] : Vocabulary::kPad;
    int next = i + 1 < length ? cache.ids[i + 1] : Vocabulary::kPad;
    grads->embeddings.row(prev) += input_grad.row(i).segment(0, dim);
    grads->embeddings.row(cache.ids[i]) += input_grad.row(i).segment(dim, dim);
    grads->embeddings.row(next) += input_grad.row(i).segment(2 * dim, dim);
  }
}

EncoderGrads EncodeBackward(const EncoderParams &params,
                            const std::vector<std::string> &tokens,
                            const Matrix &upstream) {
  EncoderGrads grads = EncoderGrads::ZerosLike(params);
  AccumulateEncodeBackward(params, EncodeWithCache(params, tokens), upstream, &grads);
  return grads;
}

}  // namespace fewner
