// Classification heads over token representations: the linear softmax head
// and the prototype (nearest-centroid) head, including multi-centroid
// prototypes.

#ifndef FEWNER_HEADS_H_
#define FEWNER_HEADS_H_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "fewner/encoder.h"

namespace fewner {

// Probability vector over an ordered label list.
struct Distribution {
  Vector probs;

  Eigen::Index size() const { return probs.size(); }
  double operator[](Eigen::Index i) const { return probs[i]; }
  // First index of the maximum, so ties go to the lowest position.
  int Argmax() const;
  // Nonnegative and summing to one within `tolerance`.
  bool IsValid(double tolerance = 1e-9) const;

  static Distribution OneHot(Eigen::Index size, Eigen::Index index);
  static Distribution Uniform(Eigen::Index size);
};

// Max-subtracted softmax.
Distribution Softmax(const Vector &logits);

// KL(target || dist) with 0 log 0 = 0. Throws std::domain_error when the
// target puts mass where dist has none, std::invalid_argument on size
// mismatch.
double CrossEntropy(const Distribution &dist, const Distribution &target);

struct LinearHead {
  Matrix weights;  // num_tags x H
  Vector bias;     // num_tags

  int num_tags() const { return static_cast<int>(weights.rows()); }
  int input_dim() const { return static_cast<int>(weights.cols()); }
  bool operator==(const LinearHead &) const = default;
};

struct LinearHeadGrads {
  Matrix weights;
  Vector bias;

  static LinearHeadGrads ZerosLike(const LinearHead &head);
  void SetZero();
};

// Weights uniform in [-0.1, 0.1], bias zero.
LinearHead InitLinearHead(int num_tags, int input_dim, uint64_t seed);

Distribution LinearForward(const LinearHead &head, const Vector &repr);

// Gradient of CrossEntropy(LinearForward(head, repr), target) scaled by
// `scale`: head gradients are added to *grads and the gradient with respect
// to repr is returned. d loss / d logits = dist - target.
Vector AccumulateLinearBackward(const LinearHead &head, const Vector &repr,
                                const Distribution &target, double scale,
                                LinearHeadGrads *grads);

struct LinearBackwardResult {
  LinearHeadGrads head;
  Vector repr;
};

LinearBackwardResult LinearBackward(const LinearHead &head, const Vector &repr,
                                    const Distribution &target);

// Centroids of one label. `label` indexes the active tag vocabulary.
struct PrototypeEntry {
  int label = 0;
  std::vector<Vector> centroids;
};

// Prototype entries kept in ascending label order, so distributions produced
// from a set are ordered by label and ties resolve to the lowest label.
class PrototypeSet {
 public:
  PrototypeSet() = default;
  // Throws std::invalid_argument on duplicate labels, empty centroid lists,
  // mismatched dimensions or non-finite values.
  explicit PrototypeSet(std::vector<PrototypeEntry> entries);

  const std::vector<PrototypeEntry> &entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  int dim() const { return dim_; }
  bool single_centroid() const;
  // Position of a label in entries(), -1 if absent.
  int Position(int label) const;
  std::vector<int> labels() const;

 private:
  std::vector<PrototypeEntry> entries_;
  int dim_ = 0;
};

// Support token representations grouped by label.
using SupportReprs = std::map<int, std::vector<Vector>>;

// One centroid per label: the arithmetic mean of its representations.
PrototypeSet BuildPrototypes(const SupportReprs &support);

// Softmax of negative Euclidean distances to single-centroid prototypes,
// ordered like protos.entries().
Distribution ProtoForward(const PrototypeSet &protos, const Vector &repr);

struct ProtoGrads {
  Vector repr;
  std::vector<Vector> centroids;  // parallel to protos.entries()
};

// Gradient of CrossEntropy(ProtoForward(protos, repr), target) scaled by
// `scale`. Centroid gradients are added to *centroid_grads (parallel to the
// entries); the query gradient is returned. The distance subgradient at zero
// distance is zero.
Vector AccumulateProtoBackward(const PrototypeSet &protos, const Vector &repr,
                               const Distribution &target, double scale,
                               std::vector<Vector> *centroid_grads);

ProtoGrads ProtoBackward(const PrototypeSet &protos, const Vector &repr,
                         const Distribution &target);

// Pushes centroid gradients back through the mean to every support
// representation. Labels absent from protos receive zero gradients.
std::map<int, std::vector<Vector>> SupportGradients(
    const SupportReprs &support, const PrototypeSet &protos,
    const std::vector<Vector> &centroid_grads);

// max(1, ceil(shots / 5)) centroids per label, clamped to the number of
// representations, found by Lloyd's k-means (50 iterations) from a seeded
// farthest-point initialization.
PrototypeSet BuildMultiPrototypes(const SupportReprs &support, int shots, uint64_t seed);

int CentroidsForShots(int shots);

// Flat softmax over negative distances to every centroid; a label scores the
// mean probability of its centroids, renormalized over labels.
Distribution MultiProtoScore(const PrototypeSet &protos, const Vector &repr);

}  // namespace fewner

#endif  // FEWNER_HEADS_H_
