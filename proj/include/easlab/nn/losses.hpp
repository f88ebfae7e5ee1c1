#pragma once

#include <vector>

#include <Eigen/Core>

#include "easlab/dsp/resample.hpp"
#include "easlab/dsp/sample_buffer.hpp"
#include "easlab/stoi/stoi.hpp"

namespace easlab::nn {

enum class Objective { Mse, Stoi, Combined };

struct LossValue {
  double total = 0.0;
  double mse_term = 0.0;   // batch mean of per-sample MSE, ||y - q||^2 / L
  double stoi_term = 0.0;  // batch mean STOI
};

// Sum of squared sample differences (per-utterance form; not divided by length).
LossValue loss_mse(const dsp::SampleBuffer& estimated, const dsp::SampleBuffer& reference);

// STOI of an estimate against a fixed clean reference, differentiable in
// the estimate. The silent-frame selection comes from the reference only
// and stays fixed; clipping passes gradient on the unclipped side
// (including the boundary) and none on the clipped side.
class DifferentiableStoi {
 public:
  explicit DifferentiableStoi(const dsp::SampleBuffer& reference,
                              const stoi::StoiConfig& config = {});

  Eigen::Index length() const { return length_; }
  int sample_rate() const { return sample_rate_; }

  double value(const Eigen::Ref<const Eigen::VectorXd>& estimate) const;
  // Returns STOI and writes d(STOI)/d(estimate) into `grad`.
  double value_and_grad(const Eigen::Ref<const Eigen::VectorXd>& estimate,
                        Eigen::VectorXd& grad) const;

 private:
  stoi::StoiConfig config_;
  Eigen::Index length_;
  int sample_rate_;
  dsp::Resampler resampler_;
  stoi::FrameSelection selection_;
  stoi::OctaveBandMatrix bands_;
  Eigen::MatrixXd clean_env_;
  Eigen::VectorXd window_;
};

// Batch STOI loss: -(1/U) sum_u stoi(y_u, q_u)
LossValue loss_stoi(const std::vector<dsp::SampleBuffer>& estimated,
                    const std::vector<dsp::SampleBuffer>& reference);
// Batch combined loss: (1/U) sum_u [ (alpha / L_u) ||y_u - q_u||^2 - stoi(y_u, q_u) ]
LossValue loss_combined(const std::vector<dsp::SampleBuffer>& estimated,
                        const std::vector<dsp::SampleBuffer>& reference, double alpha);

// Per-utterance objective term and its gradient on the estimate. The batch
// loss is the mean of these over the batch.
struct UtteranceObjective {
  double value = 0.0;
  double mse_per_sample = 0.0;
  double stoi = 0.0;
};

// `stoi_ref` may be null when objective == Mse.
UtteranceObjective utterance_objective(Objective objective, double alpha,
                                       const Eigen::Ref<const Eigen::VectorXd>& estimate,
                                       const Eigen::Ref<const Eigen::VectorXd>& reference,
                                       const DifferentiableStoi* stoi_ref,
                                       Eigen::VectorXd* grad);

}  // namespace easlab::nn
