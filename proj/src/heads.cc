#include "fewner/heads.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace fewner {
namespace {

void CheckDim(const Vector &repr, Eigen::Index expected) {
  if (repr.size() != expected) {
    throw std::invalid_argument("representation has dimension " +
                                std::to_string(repr.size()) + ", expected " +
                                std::to_string(expected));
  }
}

void CheckTarget(const Distribution &target, Eigen::Index expected) {
  if (target.size() != expected) {
    throw std::invalid_argument("target distribution has " +
                                std::to_string(target.size()) + " entries, expected " +
                                std::to_string(expected));
  }
}

// Summation in index order; BuildPrototypes and k-means share it so a
// one-cluster k-means reproduces the plain mean bit for bit.
Vector MeanOf(const std::vector<Vector> &points, const std::vector<int> &members) {
  Vector sum = Vector::Zero(points[members.front()].size());
  for (int idx : members) sum += points[idx];
  return sum / static_cast<double>(members.size());
}

}  // namespace

int Distribution::Argmax() const {
  int best = 0;
  for (Eigen::Index i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = static_cast<int>(i);
  }
  return best;
}

bool Distribution::IsValid(double tolerance) const {
  if (probs.size() == 0 || !probs.allFinite()) return false;
  if ((probs.array() < 0.0).any()) return false;
  return std::abs(probs.sum() - 1.0) <= tolerance;
}

Distribution Distribution::OneHot(Eigen::Index size, Eigen::Index index) {
  Distribution d{Vector::Zero(size)};
  d.probs[index] = 1.0;
  return d;
}

Distribution Distribution::Uniform(Eigen::Index size) {
  return {Vector::Constant(size, 1.0 / static_cast<double>(size))};
}

Distribution Softmax(const Vector &logits) {
  Vector shifted = (logits.array() - logits.maxCoeff()).exp();
  return {shifted / shifted.sum()};
}

double CrossEntropy(const Distribution &dist, const Distribution &target) {
  CheckTarget(target, dist.size());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < dist.size(); ++i) {
    double t = target[i];
    if (t <= 0.0) continue;
    if (dist[i] <= 0.0) {
      throw std::domain_error("target has mass on label " + std::to_string(i) +
                              " where the prediction is zero");
    }
    loss += t * (std::log(t) - std::log(dist[i]));
  }
  // KL is nonnegative; clip rounding noise around zero.
  return std::max(loss, 0.0);
}

LinearHeadGrads LinearHeadGrads::ZerosLike(const LinearHead &head) {
  return {Matrix::Zero(head.weights.rows(), head.weights.cols()),
          Vector::Zero(head.bias.size())};
}

void LinearHeadGrads::SetZero() {
  weights.setZero();
  bias.setZero();
}

LinearHead InitLinearHead(int num_tags, int input_dim, uint64_t seed) {
  if (num_tags < 1 || input_dim < 1) {
    throw std::invalid_argument("linear head dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-0.1, 0.1);
  LinearHead head;
  head.weights.resize(num_tags, input_dim);
  for (Eigen::Index i = 0; i < head.weights.size(); ++i) {
    head.weights.data()[i] = uniform(rng);
  }
  head.bias = Vector::Zero(num_tags);
  return head;
}

Distribution LinearForward(const LinearHead &head, const Vector &repr) {
  CheckDim(repr, head.weights.cols());
  return Softmax(head.weights * repr + head.bias);
}

Vector AccumulateLinearBackward(const LinearHead &head, const Vector &repr,
                                const Distribution &target, double scale,
                                LinearHeadGrads *grads) {
  Distribution dist = LinearForward(head, repr);
  CheckTarget(target, dist.size());
  Vector logit_grad = scale * (dist.probs - target.probs);
  grads->weights.noalias() += logit_grad * repr.transpose();
  grads->bias += logit_grad;
  return head.weights.transpose() * logit_grad;
}

LinearBackwardResult LinearBackward(const LinearHead &head, const Vector &repr,
                                    const Distribution &target) {
  LinearBackwardResult result{LinearHeadGrads::ZerosLike(head), Vector()};
  result.repr = AccumulateLinearBackward(head, repr, target, 1.0, &result.head);
  return result;
}

PrototypeSet::PrototypeSet(std::vector<PrototypeEntry> entries)
    : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const PrototypeEntry &a, const PrototypeEntry &b) { return a.label < b.label; });
  for (size_t i = 0; i < entries_.size(); ++i) {
    const PrototypeEntry &entry = entries_[i];
    if (i > 0 && entries_[i - 1].label == entry.label) {
      throw std::invalid_argument("duplicate prototype label " + std::to_string(entry.label));
    }
    if (entry.centroids.empty()) {
      throw std::invalid_argument("prototype label " + std::to_string(entry.label) +
                                  " has no centroid");
    }
    for (const Vector &c : entry.centroids) {
      if (dim_ == 0) dim_ = static_cast<int>(c.size());
      if (c.size() != dim_ || dim_ == 0) {
        throw std::invalid_argument("prototype centroids have inconsistent dimensions");
      }
      if (!c.allFinite()) throw std::invalid_argument("non-finite prototype centroid");
    }
  }
}

bool PrototypeSet::single_centroid() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [](const PrototypeEntry &e) { return e.centroids.size() == 1; });
}

int PrototypeSet::Position(int label) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), label,
      [](const PrototypeEntry &e, int l) { return e.label < l; });
  if (it == entries_.end() || it->label != label) return -1;
  return static_cast<int>(it - entries_.begin());
}

std::vector<int> PrototypeSet::labels() const {
  std::vector<int> out;
  out.reserve(entries_.size());
  for (const PrototypeEntry &e : entries_) out.push_back(e.label);
  return out;
}

PrototypeSet BuildPrototypes(const SupportReprs &support) {
  std::vector<PrototypeEntry> entries;
  for (const auto &[label, reprs] : support) {
    if (reprs.empty()) {
      throw std::invalid_argument("label " + std::to_string(label) +
                                  " has no support representations");
    }
    std::vector<int> all(reprs.size());
    for (size_t i = 0; i < reprs.size(); ++i) all[i] = static_cast<int>(i);
    entries.push_back({label, {MeanOf(reprs, all)}});
  }
  return PrototypeSet(std::move(entries));
}

Distribution ProtoForward(const PrototypeSet &protos, const Vector &repr) {
  if (protos.empty()) throw std::invalid_argument("empty prototype set");
  if (!protos.single_centroid()) {
    throw std::invalid_argument(
        "multi-centroid prototypes must be scored with MultiProtoScore");
  }
  CheckDim(repr, protos.dim());
  Vector logits(protos.size());
  for (size_t m = 0; m < protos.size(); ++m) {
    logits[m] = -(repr - protos.entries()[m].centroids.front()).norm();
  }
  return Softmax(logits);
}

Vector AccumulateProtoBackward(const PrototypeSet &protos, const Vector &repr,
                               const Distribution &target, double scale,
                               std::vector<Vector> *centroid_grads) {
  Distribution dist = ProtoForward(protos, repr);
  CheckTarget(target, dist.size());
  if (centroid_grads->size() != protos.size()) {
    centroid_grads->assign(protos.size(), Vector::Zero(protos.dim()));
  }
  Vector repr_grad = Vector::Zero(repr.size());
  for (size_t m = 0; m < protos.size(); ++m) {
    Vector diff = repr - protos.entries()[m].centroids.front();
    double distance = diff.norm();
    if (distance == 0.0) continue;
    // logit = -distance, d loss / d logit = q - t
    double coeff = scale * (target[m] - dist[m]) / distance;
    repr_grad += coeff * diff;
    (*centroid_grads)[m] -= coeff * diff;
  }
  return repr_grad;
}

ProtoGrads ProtoBackward(const PrototypeSet &protos, const Vector &repr,
                         const Distribution &target) {
  ProtoGrads grads;
  grads.centroids.assign(protos.size(), Vector::Zero(protos.dim()));
  grads.repr = AccumulateProtoBackward(protos, repr, target, 1.0, &grads.centroids);
  return grads;
}

std::map<int, std::vector<Vector>> SupportGradients(
    const SupportReprs &support, const PrototypeSet &protos,
    const std::vector<Vector> &centroid_grads) {
  std::map<int, std::vector<Vector>> out;
  for (const auto &[label, reprs] : support) {
    std::vector<Vector> &grads = out[label];
    int pos = protos.Position(label);
    for (const Vector &r : reprs) {
      if (pos < 0) {
        grads.push_back(Vector::Zero(r.size()));
      } else {
        grads.push_back(centroid_grads[pos] / static_cast<double>(reprs.size()));
      }
    }
  }
  return out;
}

int CentroidsForShots(int shots) {
  if (shots < 1) throw std::invalid_argument("shots must be positive");
  return std::max(1, (shots + 4) / 5);
}

namespace {

std::vector<Vector> KMeans(const std::vector<Vector> &points, int k,
                           std::mt19937_64 &rng) {
  const int n = static_cast<int>(points.size());
  k = std::min(k, n);
  std::vector<Vector> centroids;
  centroids.reserve(k);
  std::uniform_int_distribution<int> pick(0, n - 1);
  centroids.push_back(points[pick(rng)]);

  // Farthest-point seeding on the current minimum distance.
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(centroids.size()) < k) {
    int farthest = 0;
    for (int i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], (points[i] - centroids.back()).squaredNorm());
      if (nearest[i] > nearest[farthest]) farthest = i;
    }
    centroids.push_back(points[farthest]);
  }

  std::vector<int> assignment(n, -1);
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_dist = (points[i] - centroids[0]).squaredNorm();
      for (int c = 1; c < k; ++c) {
        double d = (points[i] - centroids[c]).squaredNorm();
        if (d < best_dist) {
          best = c;
          best_dist = d;
        }
      }
      if (assignment[i] != best) changed = true;
      assignment[i] = best;
    }
    if (!changed) break;
    for (int c = 0; c < k; ++c) {
      std::vector<int> members;
      for (int i = 0; i < n; ++i) {
        if (assignment[i] == c) members.push_back(i);
      }
      // An emptied cluster keeps its previous centroid.
      if (!members.empty()) centroids[c] = MeanOf(points, members);
    }
  }
  return centroids;
}

}  // namespace

PrototypeSet BuildMultiPrototypes(const SupportReprs &support, int shots, uint64_t seed) {
  const int k = CentroidsForShots(shots);
  std::mt19937_64 rng(seed);
  std::vector<PrototypeEntry> entries;
  for (const auto &[label, reprs] : support) {
    if (reprs.empty()) {
      throw std::invalid_argument("label " + std::to_string(label) +
                                  " has no support representations");
    }
    entries.push_back({label, KMeans(reprs, k, rng)});
  }
  return PrototypeSet(std::move(entries));
}

Distribution MultiProtoScore(const PrototypeSet &protos, const Vector &repr) {
  if (protos.empty()) throw std::invalid_argument("empty prototype set");
  CheckDim(repr, protos.dim());
  std::vector<double> flat;
  for (const PrototypeEntry &entry : protos.entries()) {
    for (const Vector &c : entry.centroids) flat.push_back(-(repr - c).norm());
  }
  Distribution per_centroid =
      Softmax(Eigen::Map<const Vector>(flat.data(), static_cast<Eigen::Index>(flat.size())));

  Vector scores(protos.size());
  Eigen::Index offset = 0;
  for (size_t m = 0; m < protos.size(); ++m) {
    const Eigen::Index count = static_cast<Eigen::Index>(protos.entries()[m].centroids.size());
    scores[m] = per_centroid.probs.segment(offset, count).sum() / static_cast<double>(count);
    offset += count;
  }
  return {scores / scores.sum()};
}

}  // namespace fewner
