#include "easlab/nn/tensor.hpp"

#include <cmath>
#include <numeric>

#include "easlab/error.hpp"

namespace easlab::nn {

Tensor::Tensor(std::vector<Eigen::Index> dims) : shape(std::move(dims)) {
  const Eigen::Index n =
      std::accumulate(shape.begin(), shape.end(), Eigen::Index{1}, std::multiplies<>());
  values = Eigen::VectorXd::Zero(n);
}

Eigen::MatrixXd activate(Activation act, Eigen::MatrixXd pre) {
  if (act == Activation::Tanh) pre = pre.array().tanh();
  return pre;
}

Eigen::MatrixXd activation_backward(Activation act, const Eigen::MatrixXd& output,
                                    const Eigen::MatrixXd& grad_output) {
  if (act == Activation::Tanh) {
    return grad_output.array() * (1.0 - output.array().square());
  }
  return grad_output;
}

void glorot_uniform(Tensor& t, Eigen::Index fan_in, Eigen::Index fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index i = 0; i < t.values.size(); ++i) t.values[i] = dist(rng);
}

Eigen::Index parameter_count(const std::vector<Tensor*>& params) {
  Eigen::Index n = 0;
  for (const Tensor* p : params) n += p->size();
  return n;
}

Eigen::VectorXd flatten_values(const std::vector<Tensor*>& params) {
  Eigen::VectorXd flat(parameter_count(params));
  Eigen::Index at = 0;
  for (const Tensor* p : params) {
    flat.segment(at, p->size()) = p->values;
    at += p->size();
  }
  return flat;
}

Eigen::VectorXd flatten_grads(const std::vector<Tensor*>& params) {
  Eigen::VectorXd flat(parameter_count(params));
  Eigen::Index at = 0;
  for (const Tensor* p : params) {
    if (p->has_grad()) {
      flat.segment(at, p->size()) = p->grad;
    } else {
      flat.segment(at, p->size()).setZero();
    }
    at += p->size();
  }
  return flat;
}

void assign_values(const std::vector<Tensor*>& params, const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (flat.size() != parameter_count(params)) throw InvalidArgument("parameter vector size mismatch");
  Eigen::Index at = 0;
  for (Tensor* p : params) {
    p->values = flat.segment(at, p->size());
    at += p->size();
  }
}

void zero_grads(const std::vector<Tensor*>& params) {
  for (Tensor* p : params) p->zero_grad();
}

}  // namespace easlab::nn
