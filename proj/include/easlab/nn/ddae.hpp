#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "easlab/dsp/sample_buffer.hpp"
#include "easlab/dsp/stft.hpp"
#include "easlab/nn/tensor.hpp"

namespace easlab::nn {

struct DenseLayer {
  int in = 1;
  int out = 1;
  Activation activation = Activation::Identity;
  Tensor weight;  // [out, in]
  Tensor bias;    // [out]

  static DenseLayer make(int in, int out, Activation act);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> matrix()
      const {
    return {weight.values.data(), out, in};
  }
};

// Maps a context-stacked, normalized log-power frame to one normalized
// log-power frame. Inputs are columns: ((2 context + 1) n_bins) x frames.
struct DdaeModel {
  int frame_len = 512;
  int hop = 256;
  int context = 2;
  std::vector<DenseLayer> layers;
  Eigen::VectorXd in_mean, in_std;    // per stacked input dimension
  Eigen::VectorXd out_mean, out_std;  // per output bin

  static DdaeModel create(int frame_len, int hop, int context, const std::vector<int>& hidden,
                          std::uint64_t seed);
  static DdaeModel create_default(std::uint64_t seed) { return create(512, 256, 2, {256, 256}, seed); }

  int n_bins() const { return frame_len / 2 + 1; }
  int input_dim() const { return (2 * context + 1) * n_bins(); }
  dsp::StftConfig stft_config() const { return {frame_len, hop, frame_len, dsp::Window::Hann}; }
  void validate() const;
  std::vector<Tensor*> parameters();
};

// log(|X|^2 + floor) per bin and frame: n_bins x n_frames.
constexpr double kLogPowerFloor = 1e-10;
Eigen::MatrixXd log_power(const dsp::Spectrogram& spec);

// Stacks each frame with `context` neighbours per side (edges replicate).
Eigen::MatrixXd stack_context(const Eigen::MatrixXd& frames, int context);

struct DdaeTrace {
  std::vector<Eigen::MatrixXd> activations;  // [0] normalized input
};

// Output in the normalized log-power domain.
Eigen::MatrixXd ddae_forward(const DdaeModel& model, const Eigen::MatrixXd& stacked,
                             DdaeTrace* trace = nullptr);
void ddae_backward(DdaeModel& model, const DdaeTrace& trace, const Eigen::MatrixXd& grad_output);

// Noisy log-power features, context stacked, for a buffer padded to whole frames.
Eigen::MatrixXd ddae_input_features(const DdaeModel& model, const dsp::SampleBuffer& noisy);
Eigen::MatrixXd ddae_target_features(const DdaeModel& model, const dsp::SampleBuffer& clean);

// Enhanced magnitudes from exp of predicted log power, noisy phase, same length.
dsp::SampleBuffer ddae_enhance(const DdaeModel& model, const dsp::SampleBuffer& noisy);

}  // namespace easlab::nn
