#include "easlab/nn/conv1d.hpp"

#include <algorithm>
#include <string>

#include "easlab/error.hpp"

namespace easlab::nn {
namespace {

// Output columns [t0, t0 + n) read input columns shifted by s.
struct Span {
  Eigen::Index t0 = 0;
  Eigen::Index n = 0;
};

Span valid_span(Eigen::Index length, Eigen::Index shift) {
  const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
  const Eigen::Index t1 = std::min<Eigen::Index>(length, length - shift);
  return {t0, std::max<Eigen::Index>(0, t1 - t0)};
}

}  // namespace

Conv1dLayer Conv1dLayer::make(int in_channels, int out_channels, int width, Activation act,
                              bool has_bias) {
  if (in_channels < 1 || out_channels < 1 || width < 1) {
    throw InvalidArgument("convolution dimensions must be positive");
  }
  Conv1dLayer layer;
  layer.in_channels = in_channels;
  layer.out_channels = out_channels;
  layer.width = width;
  layer.activation = act;
  layer.has_bias = has_bias;
  layer.weight = Tensor({out_channels, in_channels, width});
  layer.bias = Tensor({has_bias ? out_channels : 0});
  return layer;
}

Eigen::MatrixXd Conv1dLayer::tap(int k) const {
  Eigen::MatrixXd m(out_channels, in_channels);
  for (int o = 0; o < out_channels; ++o) {
    for (int i = 0; i < in_channels; ++i) m(o, i) = w(o, i, k);
  }
  return m;
}

Eigen::MatrixXd conv1d_forward(const Conv1dLayer& layer, const Eigen::MatrixXd& input) {
  if (input.rows() != layer.in_channels) {
    throw InvalidArgument("conv1d expects " + std::to_string(layer.in_channels) +
                          " input channels, got " + std::to_string(input.rows()));
  }
  const Eigen::Index len = input.cols();
  Eigen::MatrixXd pre = Eigen::MatrixXd::Zero(layer.out_channels, len);
  const int half = layer.width / 2;
  for (int k = 0; k < layer.width; ++k) {
    const Eigen::Index shift = k - half;
    const Span s = valid_span(len, shift);
    if (s.n == 0) continue;
    pre.middleCols(s.t0, s.n).noalias() += layer.tap(k) * input.middleCols(s.t0 + shift, s.n);
  }
  if (layer.has_bias) pre.colwise() += layer.bias.values;
  return activate(layer.activation, std::move(pre));
}

Eigen::MatrixXd conv1d_backward(Conv1dLayer& layer, const Eigen::MatrixXd& input,
                                const Eigen::MatrixXd& output, const Eigen::MatrixXd& grad_output) {
  if (grad_output.rows() != layer.out_channels || grad_output.cols() != input.cols()) {
    throw InvalidArgument("conv1d backward: gradient shape mismatch");
  }
  if (!layer.weight.has_grad()) layer.weight.zero_grad();
  if (layer.has_bias && !layer.bias.has_grad()) layer.bias.zero_grad();

  const Eigen::MatrixXd g = activation_backward(layer.activation, output, grad_output);
  const Eigen::Index len = input.cols();
  Eigen::MatrixXd grad_input = Eigen::MatrixXd::Zero(layer.in_channels, len);
  const int half = layer.width / 2;
  for (int k = 0; k < layer.width; ++k) {
    const Eigen::Index shift = k - half;
    const Span s = valid_span(len, shift);
    if (s.n == 0) continue;
    const Eigen::MatrixXd tap_grad =
        g.middleCols(s.t0, s.n) * input.middleCols(s.t0 + shift, s.n).transpose();
    for (int o = 0; o < layer.out_channels; ++o) {
      for (int i = 0; i < layer.in_channels; ++i) {
        layer.weight.grad[(o * layer.in_channels + i) * layer.width + k] += tap_grad(o, i);
      }
    }
    grad_input.middleCols(s.t0 + shift, s.n).noalias() +=
        layer.tap(k).transpose() * g.middleCols(s.t0, s.n);
  }
  if (layer.has_bias) layer.bias.grad += g.rowwise().sum();
  return grad_input;
}

}  // namespace easlab::nn
