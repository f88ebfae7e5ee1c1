#include "easlab/nn/fcn.hpp"

#include <random>
#include <string>

#include "easlab/error.hpp"

namespace easlab::nn {

FcnModel FcnModel::create(const FcnArchitecture& arch, std::uint64_t seed) {
  if (arch.layers < 1 || arch.channels < 1 || arch.width < 1) {
    throw InvalidArgument("FCN architecture dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  FcnModel model;
  for (int l = 0; l < arch.layers; ++l) {
    const bool last = l == arch.layers - 1;
    const int in = l == 0 ? 1 : arch.channels;
    const int out = last ? 1 : arch.channels;
    Conv1dLayer layer =
        Conv1dLayer::make(in, out, arch.width, last ? Activation::Identity : arch.hidden);
    glorot_uniform(layer.weight, static_cast<Eigen::Index>(in) * arch.width,
                   static_cast<Eigen::Index>(out) * arch.width, rng);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

FcnModel FcnModel::identity(int width) {
  FcnModel model;
  Conv1dLayer layer = Conv1dLayer::make(1, 1, width, Activation::Identity);
  layer.w(0, 0, width / 2) = 1.0;
  model.layers.push_back(std::move(layer));
  return model;
}

void FcnModel::validate() const {
  if (layers.empty()) throw InvalidArgument("FCN has no layers");
  if (layers.front().in_channels != 1) throw InvalidArgument("FCN input layer must read one channel");
  if (layers.back().out_channels != 1) {
    throw InvalidArgument("FCN output layer must have exactly one filter");
  }
  if (layers.back().activation != Activation::Identity) {
    throw InvalidArgument("FCN output layer must be linear");
  }
  for (std::size_t i = 1; i < layers.size(); ++i) {
    if (layers[i].in_channels != layers[i - 1].out_channels) {
      throw InvalidArgument("FCN layer " + std::to_string(i) + " channel mismatch");
    }
  }
}

std::vector<Tensor*> FcnModel::parameters() {
  std::vector<Tensor*> params;
  for (Conv1dLayer& layer : layers) {
    params.push_back(&layer.weight);
    if (layer.has_bias) params.push_back(&layer.bias);
  }
  return params;
}

Eigen::VectorXd fcn_forward(const FcnModel& model, const Eigen::Ref<const Eigen::VectorXd>& input,
                            FcnTrace* trace) {
  model.validate();
  if (input.size() == 0) throw InvalidArgument("FCN input is empty");
  Eigen::MatrixXd x = input.transpose();
  if (trace) {
    trace->activations.clear();
    trace->activations.push_back(x);
  }
  for (const Conv1dLayer& layer : model.layers) {
    x = conv1d_forward(layer, x);
    if (trace) trace->activations.push_back(x);
  }
  return x.row(0).transpose();
}

dsp::SampleBuffer fcn_forward(const FcnModel& model, const dsp::SampleBuffer& noisy) {
  return dsp::SampleBuffer(fcn_forward(model, noisy.samples), noisy.sample_rate);
}

void fcn_backward(FcnModel& model, const FcnTrace& trace,
                  const Eigen::Ref<const Eigen::VectorXd>& grad_output) {
  if (trace.activations.size() != model.layers.size() + 1) {
    throw InvalidArgument("FCN trace does not match model depth");
  }
  Eigen::MatrixXd g = grad_output.transpose();
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    g = conv1d_backward(model.layers[l], trace.activations[l], trace.activations[l + 1], g);
  }
}

}  // namespace easlab::nn
