#include "easlab/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "easlab/error.hpp"
#include "easlab/nn/train.hpp"

namespace easlab::nn {

GradCheckResult grad_check(const ScalarFunction& f, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& analytic, const GradCheckOptions& options) {
  if (!(options.epsilon >= 1e-6 && options.epsilon <= 1e-3)) {
    throw InvalidArgument("grad_check epsilon must be in [1e-6, 1e-3]");
  }
  if (analytic.size() != x.size()) throw InvalidArgument("analytic gradient size mismatch");
  if (x.size() == 0) throw InvalidArgument("grad_check needs at least one coordinate");

  std::vector<Eigen::Index> coords(static_cast<std::size_t>(x.size()));
  std::iota(coords.begin(), coords.end(), Eigen::Index{0});
  std::mt19937_64 rng(options.seed);
  std::shuffle(coords.begin(), coords.end(), rng);
  const auto n = std::min<std::size_t>(coords.size(), static_cast<std::size_t>(std::max(options.probes, 1)));

  GradCheckResult result;
  Eigen::VectorXd probe = x;
  for (std::size_t p = 0; p < n; ++p) {
    const Eigen::Index i = coords[p];
    probe[i] = x[i] + options.epsilon;
    const double up = f(probe);
    probe[i] = x[i] - options.epsilon;
    const double down = f(probe);
    probe[i] = x[i];
    const double numeric = (up - down) / (2.0 * options.epsilon);
    const double err = std::abs(numeric - analytic[i]);
    const double scale = std::max({std::abs(numeric), std::abs(analytic[i]), options.floor});
    result.max_abs_error = std::max(result.max_abs_error, err);
    result.max_relative_error = std::max(result.max_relative_error, err / scale);
  }
  result.probes = static_cast<int>(n);
  return result;
}

GradCheckResult grad_check_objective(Objective objective, double alpha,
                                     const dsp::SampleBuffer& estimate,
                                     const dsp::SampleBuffer& reference,
                                     const GradCheckOptions& options) {
  std::optional<DifferentiableStoi> ref;
  if (objective != Objective::Mse) ref.emplace(reference);
  const DifferentiableStoi* ref_ptr = ref ? &*ref : nullptr;
  Eigen::VectorXd grad;
  utterance_objective(objective, alpha, estimate.samples, reference.samples, ref_ptr, &grad);
  auto f = [&](const Eigen::VectorXd& y) {
    return utterance_objective(objective, alpha, y, reference.samples, ref_ptr, nullptr).value;
  };
  return grad_check(f, estimate.samples, grad, options);
}

GradCheckResult grad_check_fcn(const FcnModel& model, Objective objective, double alpha,
                               const dsp::SampleBuffer& noisy, const dsp::SampleBuffer& clean,
                               const GradCheckOptions& options) {
  FcnModel work = model;
  std::vector<Tensor*> params = work.parameters();
  std::optional<DifferentiableStoi> ref;
  if (objective != Objective::Mse) ref.emplace(clean);
  const DifferentiableStoi* ref_ptr = ref ? &*ref : nullptr;

  zero_grads(params);
  FcnTrace trace;
  Eigen::VectorXd grad_out;
  const Eigen::VectorXd out = fcn_forward(work, noisy.samples, &trace);
  utterance_objective(objective, alpha, out, clean.samples, ref_ptr, &grad_out);
  fcn_backward(work, trace, grad_out);
  const Eigen::VectorXd analytic = flatten_grads(params);
  const Eigen::VectorXd theta = flatten_values(params);

  auto f = [&](const Eigen::VectorXd& v) {
    assign_values(params, v);
    const Eigen::VectorXd y = fcn_forward(work, noisy.samples);
    return utterance_objective(objective, alpha, y, clean.samples, ref_ptr, nullptr).value;
  };
  return grad_check(f, theta, analytic, options);
}

GradCheckResult grad_check_ddae(const DdaeModel& model, const dsp::SampleBuffer& noisy,
                                const dsp::SampleBuffer& clean, const GradCheckOptions& options) {
  DdaeModel work = model;
  std::vector<Tensor*> params = work.parameters();
  const Eigen::MatrixXd input = ddae_input_features(work, noisy);
  const Eigen::MatrixXd target = ddae_target_features(work, clean);

  zero_grads(params);
  DdaeTrace trace;
  Eigen::MatrixXd grad_out;
  const Eigen::MatrixXd out = ddae_forward(work, input, &trace);
  ddae_mse(work, out, target, &grad_out);
  ddae_backward(work, trace, grad_out);
  const Eigen::VectorXd analytic = flatten_grads(params);
  const Eigen::VectorXd theta = flatten_values(params);

  auto f = [&](const Eigen::VectorXd& v) {
    assign_values(params, v);
    return ddae_mse(work, ddae_forward(work, input), target, nullptr);
  };
  return grad_check(f, theta, analytic, options);
}

}  // namespace easlab::nn
