#pragma once

#include <Eigen/Core>

namespace easlab::dsp {

// Mono waveform in double precision with its sample rate.
// Samples are nominally in [-1, 1]; every sample must be finite.
struct SampleBuffer {
  Eigen::VectorXd samples;
  int sample_rate = 16000;

  SampleBuffer() = default;
  SampleBuffer(Eigen::VectorXd s, int rate);

  Eigen::Index size() const { return samples.size(); }
  bool empty() const { return samples.size() == 0; }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Throws InvalidArgument when the rate is non-positive or a sample is not finite.
void validate(const SampleBuffer& buffer);

}  // namespace easlab::dsp
