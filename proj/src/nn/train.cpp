#include "easlab/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <string>

#include "easlab/error.hpp"

namespace easlab::nn {
namespace {

void check_dataset(const std::vector<UtterancePair>& data) {
  if (data.empty()) throw InvalidArgument("training set is empty");
  for (const UtterancePair& p : data) {
    if (p.noisy.size() != p.clean.size()) {
      throw InvalidArgument("utterance " + p.id + ": noisy and clean lengths differ");
    }
    if (p.noisy.sample_rate != p.clean.sample_rate) {
      throw InvalidArgument("utterance " + p.id + ": sample rates differ");
    }
  }
}

void check_finite(double loss, int epoch, std::size_t batch) {
  if (!std::isfinite(loss)) {
    throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                       ", batch " + std::to_string(batch));
  }
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, int batch_size,
                                                    std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(batch_size)) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(
                                             std::min(n, i + static_cast<std::size_t>(batch_size))));
  }
  return batches;
}

std::vector<std::unique_ptr<DifferentiableStoi>> stoi_references(
    const std::vector<UtterancePair>& data, Objective objective) {
  std::vector<std::unique_ptr<DifferentiableStoi>> refs(data.size());
  if (objective == Objective::Mse) return refs;
  for (std::size_t i = 0; i < data.size(); ++i) {
    refs[i] = std::make_unique<DifferentiableStoi>(data[i].clean);
  }
  return refs;
}

double fcn_dataset_loss(const FcnModel& model, const std::vector<UtterancePair>& data,
                        const TrainConfig& config,
                        const std::vector<std::unique_ptr<DifferentiableStoi>>& refs) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd out = fcn_forward(model, data[i].noisy.samples);
    total += utterance_objective(config.objective, config.alpha, out, data[i].clean.samples,
                                 refs[i].get(), nullptr)
                 .value;
  }
  return total / static_cast<double>(data.size());
}

}  // namespace

void TrainConfig::validate() const {
  if (alpha < 0.0) throw InvalidArgument("alpha must be >= 0");
  if (learning_rate < 0.0) throw InvalidArgument("learning rate must be >= 0");
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
}

double dataset_loss(const FcnModel& model, const std::vector<UtterancePair>& data,
                    const TrainConfig& config) {
  check_dataset(data);
  return fcn_dataset_loss(model, data, config, stoi_references(data, config.objective));
}

TrainResult train(FcnModel& model, const std::vector<UtterancePair>& data,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  check_dataset(data);
  model.validate();
  const auto refs = stoi_references(data, config.objective);
  std::mt19937_64 rng(config.rng_seed);
  std::vector<Tensor*> params = model.parameters();
  Optimizer optimizer(params, config.optimizer);

  TrainResult result;
  result.initial_loss = fcn_dataset_loss(model, data, config, refs);
  check_finite(result.initial_loss, 0, 0);

  FcnTrace trace;
  Eigen::VectorXd grad;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double epoch_total = 0.0;
    const auto batches = epoch_batches(data.size(), config.batch_size, rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      zero_grads(params);
      double batch_total = 0.0;
      const auto count = static_cast<double>(batches[b].size());
      for (std::size_t idx : batches[b]) {
        const Eigen::VectorXd out = fcn_forward(model, data[idx].noisy.samples, &trace);
        const UtteranceObjective o =
            utterance_objective(config.objective, config.alpha, out, data[idx].clean.samples,
                                refs[idx].get(), &grad);
        batch_total += o.value;
        fcn_backward(model, trace, grad / count);
      }
      batch_total /= count;
      check_finite(batch_total, epoch, b);
      optimizer.step(config.learning_rate);
      epoch_total += batch_total;
    }
    const double epoch_loss = epoch_total / static_cast<double>(batches.size());
    result.epoch_loss.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  result.final_loss = fcn_dataset_loss(model, data, config, refs);
  check_finite(result.final_loss, config.epochs, 0);
  return result;
}

void fit_normalization(DdaeModel& model, const std::vector<UtterancePair>& data) {
  check_dataset(data);
  Eigen::VectorXd in_sum = Eigen::VectorXd::Zero(model.input_dim());
  Eigen::VectorXd in_sq = Eigen::VectorXd::Zero(model.input_dim());
  Eigen::VectorXd out_sum = Eigen::VectorXd::Zero(model.n_bins());
  Eigen::VectorXd out_sq = Eigen::VectorXd::Zero(model.n_bins());
  double frames = 0.0;
  for (const UtterancePair& p : data) {
    const Eigen::MatrixXd in = ddae_input_features(model, p.noisy);
    const Eigen::MatrixXd out = ddae_target_features(model, p.clean);
    in_sum += in.rowwise().sum();
    in_sq += in.cwiseAbs2().rowwise().sum();
    out_sum += out.rowwise().sum();
    out_sq += out.cwiseAbs2().rowwise().sum();
    frames += static_cast<double>(in.cols());
  }
  auto finish = [frames](const Eigen::VectorXd& sum, const Eigen::VectorXd& sq,
                         Eigen::VectorXd& mean, Eigen::VectorXd& stdev) {
    mean = sum / frames;
    stdev = (sq / frames - mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt().cwiseMax(1e-3);
  };
  finish(in_sum, in_sq, model.in_mean, model.in_std);
  finish(out_sum, out_sq, model.out_mean, model.out_std);
}

double ddae_mse(const DdaeModel& model, const Eigen::MatrixXd& output,
                const Eigen::MatrixXd& target_lps, Eigen::MatrixXd* grad) {
  const Eigen::MatrixXd target =
      (target_lps.colwise() - model.out_mean).array().colwise() / model.out_std.array();
  const Eigen::MatrixXd diff = output - target;
  const auto count = static_cast<double>(diff.size());
  if (grad) *grad = (2.0 / count) * diff;
  return diff.squaredNorm() / count;
}

double dataset_loss(const DdaeModel& model, const std::vector<UtterancePair>& data) {
  check_dataset(data);
  double total = 0.0;
  for (const UtterancePair& p : data) {
    const Eigen::MatrixXd out = ddae_forward(model, ddae_input_features(model, p.noisy));
    total += ddae_mse(model, out, ddae_target_features(model, p.clean), nullptr);
  }
  return total / static_cast<double>(data.size());
}

TrainResult train(DdaeModel& model, const std::vector<UtterancePair>& data,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  check_dataset(data);
  model.validate();
  const bool identity_stats = (model.in_mean.array() == 0.0).all() &&
                              (model.in_std.array() == 1.0).all() &&
                              (model.out_mean.array() == 0.0).all() &&
                              (model.out_std.array() == 1.0).all();
  if (identity_stats) fit_normalization(model, data);

  std::vector<Eigen::MatrixXd> inputs, targets;
  for (const UtterancePair& p : data) {
    inputs.push_back(ddae_input_features(model, p.noisy));
    targets.push_back(ddae_target_features(model, p.clean));
  }
  std::mt19937_64 rng(config.rng_seed);
  std::vector<Tensor*> params = model.parameters();
  Optimizer optimizer(params, config.optimizer);

  TrainResult result;
  result.initial_loss = dataset_loss(model, data);
  check_finite(result.initial_loss, 0, 0);
  DdaeTrace trace;
  Eigen::MatrixXd grad;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double epoch_total = 0.0;
    const auto batches = epoch_batches(data.size(), config.batch_size, rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      zero_grads(params);
      double batch_total = 0.0;
      const auto count = static_cast<double>(batches[b].size());
      for (std::size_t idx : batches[b]) {
        const Eigen::MatrixXd out = ddae_forward(model, inputs[idx], &trace);
        batch_total += ddae_mse(model, out, targets[idx], &grad);
        ddae_backward(model, trace, grad / count);
      }
      batch_total /= count;
      check_finite(batch_total, epoch, b);
      optimizer.step(config.learning_rate);
      epoch_total += batch_total;
    }
    const double epoch_loss = epoch_total / static_cast<double>(batches.size());
    result.epoch_loss.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  result.final_loss = dataset_loss(model, data);
  check_finite(result.final_loss, config.epochs, 0);
  return result;
}

}  // namespace easlab::nn
