// Adam with a linear warmup / linear decay learning-rate schedule.

#ifndef FEWNER_OPTIMIZER_H_
#define FEWNER_OPTIMIZER_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fewner/encoder.h"

namespace fewner {

// Raised on non-finite gradients or parameters.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Linear ramp from 0 to base_lr over the first warmup_fraction * total_steps
// steps, then linear decay to 0 at total_steps.
double ScheduledLearningRate(int64_t step, int64_t total_steps, double base_lr,
                             double warmup_fraction);

// One trainable array and its gradient, both contiguous and equally sized.
struct ParamBlock {
  std::string name;
  std::span<double> values;
  std::span<const double> grads;
};

template <typename Derived, typename GradDerived>
ParamBlock MakeBlock(std::string name, Eigen::PlainObjectBase<Derived> &values,
                     const Eigen::PlainObjectBase<GradDerived> &grads) {
  return {std::move(name), {values.data(), static_cast<size_t>(values.size())},
          {grads.data(), static_cast<size_t>(grads.size())}};
}

class OptimizerState {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  OptimizerState(double base_lr, double warmup_fraction, int64_t total_steps);

  int64_t step() const { return step_; }
  int64_t total_steps() const { return total_steps_; }
  double base_lr() const { return base_lr_; }
  double warmup_fraction() const { return warmup_fraction_; }

  // Learning rate used by the next AdamStep.
  double LearningRate() const;

  // Applies one bias-corrected Adam update. Blocks must be passed in the
  // same order and with the same sizes on every call. Throws NumericError
  // naming the block before any parameter changes if a gradient is not
  // finite.
  void AdamStep(std::span<const ParamBlock> blocks);

 private:
  double base_lr_;
  double warmup_fraction_;
  int64_t total_steps_;
  int64_t step_ = 0;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
};

}  // namespace fewner

#endif  // FEWNER_OPTIMIZER_H_
