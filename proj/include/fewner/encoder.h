// Desk-scale token encoder: embedding lookup, a three-token window and a tanh
// projection, with exact analytic gradients.

#ifndef FEWNER_ENCODER_H_
#define FEWNER_ENCODER_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace fewner {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Case-sensitive word vocabulary. Ids 0 and 1 are the reserved <PAD> and
// <UNK> rows; words follow in the order given at construction.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr std::string_view kPadToken = "<PAD>";
  static constexpr std::string_view kUnkToken = "<UNK>";

  Vocabulary() = default;
  // Duplicates and the reserved names are dropped.
  explicit Vocabulary(const std::vector<std::string> &words);

  // Sorted set of all words in the given token lists.
  static Vocabulary FromSentences(const std::vector<std::vector<std::string>> &sentences);

  int Id(std::string_view word) const;
  std::vector<int> Ids(const std::vector<std::string> &tokens) const;

  // All entries including the reserved ones, in id order.
  const std::vector<std::string> &entries() const { return entries_; }
  // Number of rows in the embedding table.
  int size() const { return static_cast<int>(entries_.size()); }
  int num_words() const { return size() - 2; }

  bool operator==(const Vocabulary &other) const { return entries_ == other.entries_; }

 private:
  std::vector<std::string> entries_{std::string(kPadToken), std::string(kUnkToken)};
  std::map<std::string, int, std::less<>> index_;
};

struct EncoderParams {
  Vocabulary vocab;
  int embed_dim = 0;
  int hidden_dim = 0;
  Matrix embeddings;  // |vocab| x E
  Matrix weights;     // H x 3E, columns ordered previous | current | next
  Vector bias;        // H

  // Throws std::invalid_argument on inconsistent shapes or non-finite values.
  void Validate() const;
  bool operator==(const EncoderParams &other) const;
};

// Gradients shaped like EncoderParams.
struct EncoderGrads {
  Matrix embeddings;
  Matrix weights;
  Vector bias;

  static EncoderGrads ZerosLike(const EncoderParams &params);
  void SetZero();
};

// Embeddings and weights uniform in [-0.1, 0.1], bias zero.
EncoderParams InitEncoder(const Vocabulary &vocab, int embed_dim, int hidden_dim,
                          uint64_t seed);

// Forward state kept for the backward pass.
struct EncodedSentence {
  std::vector<int> ids;
  Matrix inputs;  // T x 3E window concatenations
  Matrix reprs;   // T x H, row i is the representation of token i
};

EncodedSentence EncodeWithCache(const EncoderParams &params,
                                const std::vector<std::string> &tokens);

// T x H token representations.
Matrix Encode(const EncoderParams &params, const std::vector<std::string> &tokens);

// Adds the gradient of sum_i <upstream_i, repr_i> to *grads.
void AccumulateEncodeBackward(const EncoderParams &params, const EncodedSentence &cache,
                              const Matrix &upstream, EncoderGrads *grads);

EncoderGrads EncodeBackward(const EncoderParams &params,
                            const std::vector<std::string> &tokens,
                            const Matrix &upstream);

}  // namespace fewner

#endif  // FEWNER_ENCODER_H_
