#pragma once

#include <vector>

#include <Eigen/Core>

#include "easlab/dsp/sample_buffer.hpp"

namespace easlab::dsp {

// Rational-rate band-limited resampler: Kaiser-windowed sinc with 64 taps
// per output phase, cutoff at the lower of the two Nyquist rates. Each
// phase's taps are normalized to unit sum so DC passes exactly.
//
// The operator is linear and fixed for a given (source, target, length),
// so `adjoint` is its exact transpose; the differentiable STOI loss relies
// on that.
class Resampler {
 public:
  static constexpr int kTaps = 64;
  static constexpr double kKaiserBeta = 8.0;

  Resampler(int source_rate, int target_rate);

  int source_rate() const { return source_rate_; }
  int target_rate() const { return target_rate_; }
  bool identity() const { return source_rate_ == target_rate_; }

  // round(n * target / source)
  Eigen::Index output_length(Eigen::Index n) const;

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // Transpose of apply(): maps a gradient on the output back onto an input
  // of `input_length` samples.
  Eigen::VectorXd adjoint(const Eigen::Ref<const Eigen::VectorXd>& grad_out,
                          Eigen::Index input_length) const;

 private:
  // First source index touched by output sample n, and its phase.
  Eigen::Index first_tap(Eigen::Index n) const;
  int phase(Eigen::Index n) const;

  int source_rate_;
  int target_rate_;
  int up_;    // target / gcd
  int down_;  // source / gcd
  std::vector<Eigen::VectorXd> phase_taps_;
};

SampleBuffer resample(const SampleBuffer& buffer, int target_rate);

}  // namespace easlab::dsp
