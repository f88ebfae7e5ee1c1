#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace easlab::nn {

// Flat row-major parameter storage with an optional gradient of the same shape.
struct Tensor {
  std::vector<Eigen::Index> shape;
  Eigen::VectorXd values;
  Eigen::VectorXd grad;

  Tensor() = default;
  explicit Tensor(std::vector<Eigen::Index> dims);

  Eigen::Index size() const { return values.size(); }
  bool has_grad() const { return grad.size() == values.size(); }
  void zero_grad() { grad = Eigen::VectorXd::Zero(values.size()); }
  bool all_finite() const { return values.allFinite() && (!has_grad() || grad.allFinite()); }
};

enum class Activation : std::uint8_t { Identity = 0, Tanh = 1 };

// Applies the activation in place and returns the result.
Eigen::MatrixXd activate(Activation act, Eigen::MatrixXd pre);
// Multiplies an upstream gradient by the activation derivative, given the
// activation's output.
Eigen::MatrixXd activation_backward(Activation act, const Eigen::MatrixXd& output,
                                    const Eigen::MatrixXd& grad_output);

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& t, Eigen::Index fan_in, Eigen::Index fan_out, std::mt19937_64& rng);

Eigen::Index parameter_count(const std::vector<Tensor*>& params);
Eigen::VectorXd flatten_values(const std::vector<Tensor*>& params);
Eigen::VectorXd flatten_grads(const std::vector<Tensor*>& params);
void assign_values(const std::vector<Tensor*>& params, const Eigen::Ref<const Eigen::VectorXd>& flat);
void zero_grads(const std::vector<Tensor*>& params);

}  // namespace easlab::nn
