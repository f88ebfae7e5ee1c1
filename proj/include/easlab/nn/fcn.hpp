#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "easlab/dsp/sample_buffer.hpp"
#include "easlab/nn/conv1d.hpp"

namespace easlab::nn {

struct FcnArchitecture {
  int layers = 4;  // including the single-filter output layer
  int channels = 16;
  int width = 33;
  Activation hidden = Activation::Tanh;

  static FcnArchitecture desk() { return {4, 16, 33, Activation::Tanh}; }
  static FcnArchitecture full() { return {8, 30, 55, Activation::Tanh}; }
};

// Waveform-in, waveform-out fully convolutional enhancer. The first layer
// reads one channel; the last layer is a single linear filter.
struct FcnModel {
  std::vector<Conv1dLayer> layers;

  static FcnModel create(const FcnArchitecture& arch, std::uint64_t seed);
  // Single layer whose filter is a centred unit impulse.
  static FcnModel identity(int width = 1);

  void validate() const;
  std::vector<Tensor*> parameters();
};

// Per-layer activations from a forward pass: [0] is the input.
struct FcnTrace {
  std::vector<Eigen::MatrixXd> activations;
};

Eigen::VectorXd fcn_forward(const FcnModel& model, const Eigen::Ref<const Eigen::VectorXd>& input,
                            FcnTrace* trace = nullptr);
dsp::SampleBuffer fcn_forward(const FcnModel& model, const dsp::SampleBuffer& noisy);

// Accumulates parameter gradients for d(loss)/d(output) = grad_output.
void fcn_backward(FcnModel& model, const FcnTrace& trace,
                  const Eigen::Ref<const Eigen::VectorXd>& grad_output);

}  // namespace easlab::nn
