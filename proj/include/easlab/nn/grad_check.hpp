#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Core>

#include "easlab/dsp/sample_buffer.hpp"
#include "easlab/nn/ddae.hpp"
#include "easlab/nn/fcn.hpp"
#include "easlab/nn/losses.hpp"

namespace easlab::nn {

struct GradCheckOptions {
  double epsilon = 1e-4;
  int probes = 50;
  std::uint64_t seed = 1729;
  // Denominator floor: |a - n| / max(|a|, |n|, floor).
  double floor = 1e-8;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_abs_error = 0.0;
  int probes = 0;
};

using ScalarFunction = std::function<double(const Eigen::VectorXd&)>;

// Central differences of f around x at `probes` distinct random coordinates,
// compared with the supplied analytic gradient. epsilon must be in [1e-6, 1e-3].
GradCheckResult grad_check(const ScalarFunction& f, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& analytic, const GradCheckOptions& options = {});

// Gradient of the objective with respect to the estimate waveform.
GradCheckResult grad_check_objective(Objective objective, double alpha,
                                     const dsp::SampleBuffer& estimate,
                                     const dsp::SampleBuffer& reference,
                                     const GradCheckOptions& options = {});

// Gradient of the objective with respect to every FCN parameter.
GradCheckResult grad_check_fcn(const FcnModel& model, Objective objective, double alpha,
                               const dsp::SampleBuffer& noisy, const dsp::SampleBuffer& clean,
                               const GradCheckOptions& options = {});

// DDAE parameters under normalized log-spectral MSE.
GradCheckResult grad_check_ddae(const DdaeModel& model, const dsp::SampleBuffer& noisy,
                                const dsp::SampleBuffer& clean,
                                const GradCheckOptions& options = {});

}  // namespace easlab::nn
