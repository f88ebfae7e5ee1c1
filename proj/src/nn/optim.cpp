#include "easlab/nn/optim.hpp"

#include <cmath>

#include "easlab/error.hpp"

namespace easlab::nn {

Optimizer::Optimizer(std::vector<Tensor*> params, OptimizerConfig config)
    : params_(std::move(params)), config_(config) {
  for (const Tensor* p : params_) {
    m_.push_back(Eigen::VectorXd::Zero(p->size()));
    v_.push_back(Eigen::VectorXd::Zero(p->size()));
  }
}

void Optimizer::step(double learning_rate) {
  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = *params_[i];
    if (!p.has_grad()) continue;
    if (config_.kind == OptimizerConfig::Kind::Sgd) {
      p.values -= learning_rate * p.grad;
      continue;
    }
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * p.grad;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * p.grad.cwiseAbs2();
    p.values.array() -= learning_rate * (m_[i].array() / c1) /
                        ((v_[i].array() / c2).sqrt() + config_.epsilon);
  }
}

}  // namespace easlab::nn
