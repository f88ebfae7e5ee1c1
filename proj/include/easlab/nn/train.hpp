#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "easlab/dsp/sample_buffer.hpp"
#include "easlab/nn/ddae.hpp"
#include "easlab/nn/fcn.hpp"
#include "easlab/nn/losses.hpp"
#include "easlab/nn/optim.hpp"

namespace easlab::nn {

struct TrainConfig {
  Objective objective = Objective::Combined;
  double alpha = 10.0;
  double learning_rate = 1e-3;
  int epochs = 10;
  int batch_size = 1;  // utterances per update
  std::uint64_t rng_seed = 1729;
  OptimizerConfig optimizer;

  void validate() const;
};

struct UtterancePair {
  dsp::SampleBuffer noisy;
  dsp::SampleBuffer clean;
  std::string id;
};

struct TrainResult {
  double initial_loss = 0.0;        // whole dataset, before any update
  std::vector<double> epoch_loss;   // mean batch loss seen during each epoch
  double final_loss = 0.0;          // whole dataset, after the last update
};

using EpochCallback = std::function<void(int epoch, double loss)>;

// Utterance-level training: each utterance goes through the network whole.
// Deterministic for a given rng_seed (shuffling is the only randomness).
// Throws NumericError when the loss turns non-finite.
TrainResult train(FcnModel& model, const std::vector<UtterancePair>& data,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

// Mean per-utterance objective over the dataset.
double dataset_loss(const FcnModel& model, const std::vector<UtterancePair>& data,
                    const TrainConfig& config);

// Frame-level log-spectral regression. Fits feature normalization on the
// first call (when the model still has identity statistics). The objective
// is MSE in the normalized log-power domain regardless of config.objective.
TrainResult train(DdaeModel& model, const std::vector<UtterancePair>& data,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

double dataset_loss(const DdaeModel& model, const std::vector<UtterancePair>& data);

void fit_normalization(DdaeModel& model, const std::vector<UtterancePair>& data);

// Mean squared error over all entries, normalized domain; writes d/d(output).
double ddae_mse(const DdaeModel& model, const Eigen::MatrixXd& output,
                const Eigen::MatrixXd& target_lps, Eigen::MatrixXd* grad);

}  // namespace easlab::nn
