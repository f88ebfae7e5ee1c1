#pragma once

#include <Eigen/Core>

#include "easlab/nn/tensor.hpp"

namespace easlab::nn {

// 1-D convolution with "same" padding over a (channels x time) signal:
//   out[c, t] = act( sum_{c', k} W[c, c', k] in[c', t + k - width/2] + b[c] )
struct Conv1dLayer {
  int in_channels = 1;
  int out_channels = 1;
  int width = 1;
  Activation activation = Activation::Identity;
  bool has_bias = true;
  Tensor weight;  // [out, in, width]
  Tensor bias;    // [out]

  static Conv1dLayer make(int in_channels, int out_channels, int width, Activation act,
                          bool has_bias = true);

  double& w(int out, int in, int k) { return weight.values[(out * in_channels + in) * width + k]; }
  double w(int out, int in, int k) const {
    return weight.values[(out * in_channels + in) * width + k];
  }
  // Weight slice for tap k as an (out x in) matrix.
  Eigen::MatrixXd tap(int k) const;
};

Eigen::MatrixXd conv1d_forward(const Conv1dLayer& layer, const Eigen::MatrixXd& input);

// Accumulates into layer.weight.grad / layer.bias.grad (allocating them if
// needed) and returns the gradient with respect to `input`. `output` is the
// post-activation result of the forward pass.
Eigen::MatrixXd conv1d_backward(Conv1dLayer& layer, const Eigen::MatrixXd& input,
                                const Eigen::MatrixXd& output, const Eigen::MatrixXd& grad_output);

}  // namespace easlab::nn
