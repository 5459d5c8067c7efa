#include "doctest.h"
#include "fewner/optimizer.h"

#include <cmath>

namespace fewner {
namespace {

TEST_CASE("ScheduledLearningRate") {
  CHECK(ScheduledLearningRate(0, 100, 1e-4, 0.1) == 0.0);
  CHECK(ScheduledLearningRate(5, 100, 1e-4, 0.1) == 1e-4 * 0.5);
  CHECK(ScheduledLearningRate(10, 100, 1e-4, 0.1) == 1e-4);
  CHECK(ScheduledLearningRate(55, 100, 1e-4, 0.1) == 1e-4 * 0.5);
  CHECK(ScheduledLearningRate(100, 100, 1e-4, 0.1) == 0.0);
  CHECK(ScheduledLearningRate(0, 100, 1e-4, 0.0) == 1e-4);
}

TEST_CASE("Adam leaves parameters alone under zero gradients") {
  OptimizerState state(1e-2, 0.0, 10);
  Vector x = Vector::LinSpaced(3, 1.0, 3.0);
  const Vector before = x;
  Vector g = Vector::Zero(3);
  std::vector<ParamBlock> blocks = {MakeBlock("x", x, g)};
  for (int i = 0; i < 5; ++i) state.AdamStep(blocks);
  CHECK(x == before);
  CHECK(state.step() == 5);
}

TEST_CASE("Adam's first step moves by about the learning rate") {
  for (double grad : {1e-3, 0.5, -7.0}) {
    OptimizerState state(1e-2, 0.0, 10);
    Vector x = Vector::Zero(1);
    Vector g = Vector::Constant(1, grad);
    std::vector<ParamBlock> blocks = {MakeBlock("x", x, g)};
    state.AdamStep(blocks);
    CHECK(std::abs(x[0]) == doctest::Approx(1e-2).epsilon(1e-4));
    CHECK(x[0] * grad < 0.0);
  }
}

TEST_CASE("Adam is deterministic") {
  auto run = [] {
    OptimizerState state(1e-2, 0.1, 50);
    Vector x = Vector::LinSpaced(4, -1.0, 1.0);
    Vector g(4);
    std::vector<ParamBlock> blocks = {MakeBlock("x", x, g)};
    for (int i = 0; i < 50; ++i) {
      g = 2.0 * x + Vector::Constant(4, 0.3);
      state.AdamStep(blocks);
    }
    return x;
  };
  CHECK(run() == run());
}

TEST_CASE("Adam rejects non-finite gradients before updating") {
  OptimizerState state(1e-2, 0.0, 10);
  Vector a = Vector::Ones(2);
  Vector ga = Vector::Ones(2);
  Vector b = Vector::Ones(2);
  Vector gb = Vector::Ones(2);
  gb[1] = std::nan("");
  std::vector<ParamBlock> blocks = {MakeBlock("a", a, ga), MakeBlock("b", b, gb)};
  CHECK_THROWS_WITH_AS(state.AdamStep(blocks), doctest::Contains("b"), NumericError);
  CHECK(a == Vector::Ones(2));
}

}  // namespace
}  // namespace fewner
