#pragma once

#include <vector>

#include <Eigen/Core>

#include "easlab/nn/tensor.hpp"

namespace easlab::nn {

struct OptimizerConfig {
  enum class Kind { Sgd, Adam };
  Kind kind = Kind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Stateful first-order optimizer over a fixed parameter list.
class Optimizer {
 public:
  Optimizer(std::vector<Tensor*> params, OptimizerConfig config);

  // Applies one update from the parameters' current gradients.
  void step(double learning_rate);

 private:
  std::vector<Tensor*> params_;
  OptimizerConfig config_;
  std::vector<Eigen::VectorXd> m_;
  std::vector<Eigen::VectorXd> v_;
  long steps_ = 0;
};

}  // namespace easlab::nn
