#include "fewner/optimizer.h"

#include <algorithm>
#include <cmath>

namespace fewner {

double ScheduledLearningRate(int64_t step, int64_t total_steps, double base_lr,
                             double warmup_fraction) {
  if (total_steps < 1) throw std::invalid_argument("total_steps must be at least 1");
  const double total = static_cast<double>(total_steps);
  const double warmup = warmup_fraction * total;
  const double s = static_cast<double>(step);
  if (s < warmup) return base_lr * (s / warmup);
  if (s >= total) return 0.0;
  return base_lr * ((total - s) / (total - warmup));
}

OptimizerState::OptimizerState(double base_lr, double warmup_fraction,
                               int64_t total_steps)
    : base_lr_(base_lr), warmup_fraction_(warmup_fraction), total_steps_(total_steps) {
  if (total_steps < 1) throw std::invalid_argument("total_steps must be at least 1");
  if (warmup_fraction < 0.0 || warmup_fraction > 1.0) {
    throw std::invalid_argument("warmup fraction must lie in [0, 1]");
  }
  if (!(base_lr >= 0.0)) throw std::invalid_argument("learning rate must be nonnegative");
}

double OptimizerState::LearningRate() const {
  return ScheduledLearningRate(step_, total_steps_, base_lr_, warmup_fraction_);
}

void OptimizerState::AdamStep(std::span<const ParamBlock> blocks) {
  if (first_moment_.empty()) {
    for (const ParamBlock &block : blocks) {
      first_moment_.emplace_back(block.values.size(), 0.0);
      second_moment_.emplace_back(block.values.size(), 0.0);
    }
  }
  if (first_moment_.size() != blocks.size()) {
    throw std::invalid_argument("parameter block count changed between steps");
  }
  for (size_t b = 0; b < blocks.size(); ++b) {
    const ParamBlock &block = blocks[b];
    if (block.values.size() != block.grads.size() ||
        block.values.size() != first_moment_[b].size()) {
      throw std::invalid_argument("shape mismatch in parameter block '" + block.name + "'");
    }
    if (!std::all_of(block.grads.begin(), block.grads.end(),
                     [](double g) { return std::isfinite(g); })) {
      throw NumericError("non-finite gradient in parameter block '" + block.name + "'");
    }
  }

  const double lr = LearningRate();
  const double t = static_cast<double>(step_ + 1);
  const double correction1 = 1.0 - std::pow(kBeta1, t);
  const double correction2 = 1.0 - std::pow(kBeta2, t);
  for (size_t b = 0; b < blocks.size(); ++b) {
    std::vector<double> &m = first_moment_[b];
    std::vector<double> &v = second_moment_[b];
    std::span<double> values = blocks[b].values;
    std::span<const double> grads = blocks[b].grads;
    for (size_t i = 0; i < values.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grads[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grads[i] * grads[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= lr * m_hat / (std::sqrt(v_hat) + kEpsilon);
    }
  }
  ++step_;
}

}  // namespace fewner
