#include "easlab/nn/losses.hpp"

#include <complex>
#include <limits>
#include <memory>

#include <unsupported/Eigen/FFT>

#include "easlab/dsp/stft.hpp"
#include "easlab/error.hpp"

namespace easlab::nn {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_pair(const dsp::SampleBuffer& a, const dsp::SampleBuffer& b) {
  if (a.size() != b.size()) throw InvalidArgument("estimate and reference lengths differ");
  if (a.sample_rate != b.sample_rate) throw InvalidArgument("estimate and reference rates differ");
}

}  // namespace

LossValue loss_mse(const dsp::SampleBuffer& estimated, const dsp::SampleBuffer& reference) {
  check_pair(estimated, reference);
  LossValue v;
  v.total = (estimated.samples - reference.samples).squaredNorm();
  v.mse_term = estimated.empty() ? 0.0 : v.total / static_cast<double>(estimated.size());
  return v;
}

DifferentiableStoi::DifferentiableStoi(const dsp::SampleBuffer& reference,
                                       const stoi::StoiConfig& config)
    : config_(config),
      length_(reference.size()),
      sample_rate_(reference.sample_rate),
      resampler_(reference.sample_rate, config.eval_rate) {
  config_.validate();
  const Eigen::VectorXd clean = resampler_.apply(reference.samples);
  selection_ = stoi::select_speech_frames(clean, config_);
  bands_ = stoi::third_octave_matrix(config_);
  clean_env_ = stoi::band_envelopes(stoi::frame_spectra(selection_.apply(clean), config_), bands_);
  if (clean_env_.cols() < config_.segment_frames) {
    throw InvalidArgument("utterance too short for one STOI segment after silence removal");
  }
  window_ = dsp::make_window(dsp::Window::Hann, config_.frame_len);
}

double DifferentiableStoi::value(const Eigen::Ref<const Eigen::VectorXd>& estimate) const {
  if (estimate.size() != length_) throw InvalidArgument("estimate length differs from reference");
  const Eigen::VectorXd y = selection_.apply(resampler_.apply(estimate));
  const Eigen::MatrixXd env = stoi::band_envelopes(stoi::frame_spectra(y, config_), bands_);
  return stoi::segment_correlation(clean_env_, env, config_);
}

double DifferentiableStoi::value_and_grad(const Eigen::Ref<const Eigen::VectorXd>& estimate,
                                          Eigen::VectorXd& grad) const {
  if (estimate.size() != length_) throw InvalidArgument("estimate length differs from reference");
  const Eigen::VectorXd y = selection_.apply(resampler_.apply(estimate));
  const Eigen::MatrixXcd spectra = stoi::frame_spectra(y, config_);
  const Eigen::MatrixXd env = stoi::band_envelopes(spectra, bands_);

  const int n = config_.segment_frames;
  const Eigen::Index bands = env.rows();
  const Eigen::Index frames = env.cols();
  const double ceiling = config_.clip_factor();
  const double scale = 1.0 / (static_cast<double>(frames - n + 1) * static_cast<double>(bands));

  // Segment statistics and d(score)/d(envelope).
  double total = 0.0;
  Eigen::MatrixXd env_grad = Eigen::MatrixXd::Zero(bands, frames);
  for (Eigen::Index m = n; m <= frames; ++m) {
    for (Eigen::Index j = 0; j < bands; ++j) {
      const Eigen::VectorXd x = clean_env_.block(j, m - n, 1, n).transpose();
      const Eigen::VectorXd e = env.block(j, m - n, 1, n).transpose();
      const double x_norm = x.norm();
      const double e_norm = e.norm();
      const double alpha = x_norm / (e_norm + kEps);
      const Eigen::VectorXd scaled = alpha * e;
      const Eigen::VectorXd cap = ceiling * x;
      const Eigen::Array<bool, Eigen::Dynamic, 1> pass = scaled.array() <= cap.array();
      const Eigen::VectorXd clipped = pass.select(scaled, cap);

      const Eigen::VectorXd xc = x.array() - x.mean();
      const Eigen::VectorXd xn = xc / (xc.norm() + kEps);
      const Eigen::VectorXd u = clipped.array() - clipped.mean();
      const double r = u.norm();
      const double denom = r + kEps;
      const double dot = xn.dot(u);
      total += dot / denom;

      Eigen::VectorXd du = xn / denom;
      if (r > 0.0) du -= (dot / (r * denom * denom)) * u;
      const Eigen::VectorXd dclipped = du.array() - du.mean();
      const Eigen::VectorXd dscaled = pass.select(dclipped, Eigen::VectorXd::Zero(n));
      Eigen::VectorXd de = alpha * dscaled;
      if (e_norm > 0.0) {
        const double dalpha = dscaled.dot(e);
        de -= dalpha * x_norm / ((e_norm + kEps) * (e_norm + kEps) * e_norm) * e;
      }
      env_grad.block(j, m - n, 1, n) += scale * de.transpose();
    }
  }

  // Envelope -> windowed frame samples. With E = sum_{k in band} |F_k|^2
  // and env = sqrt(E): d env / d frame[n] = w[n] Re(sum_k F_k e^{2 pi i k n / K}) / env.
  Eigen::VectorXd ys_grad = Eigen::VectorXd::Zero(y.size());
  Eigen::FFT<double> fft;
  const int fft_len = config_.fft_len;
  std::vector<std::complex<double>> coeffs(static_cast<std::size_t>(fft_len));
  std::vector<std::complex<double>> time;
  for (Eigen::Index m = 0; m < frames; ++m) {
    std::fill(coeffs.begin(), coeffs.end(), std::complex<double>(0.0, 0.0));
    bool any = false;
    for (Eigen::Index j = 0; j < bands; ++j) {
      const double g = env_grad(j, m);
      const double v = env(j, m);
      if (g == 0.0 || v <= 0.0) continue;
      any = true;
      const auto [first, last] = bands_.bin_ranges[static_cast<std::size_t>(j)];
      for (int k = first; k < last; ++k) {
        coeffs[static_cast<std::size_t>(k)] = (g / v) * spectra(m, k);
      }
    }
    if (!any) continue;
    fft.inv(time, coeffs);  // includes 1 / fft_len
    const Eigen::Index start = m * config_.hop;
    for (int t = 0; t < config_.frame_len; ++t) {
      ys_grad[start + t] += window_[t] * fft_len * time[static_cast<std::size_t>(t)].real();
    }
  }

  grad = resampler_.adjoint(selection_.adjoint(ys_grad), length_);
  return total * scale;
}

namespace {

LossValue batch_loss(const std::vector<dsp::SampleBuffer>& estimated,
                     const std::vector<dsp::SampleBuffer>& reference, Objective objective,
                     double alpha) {
  if (estimated.size() != reference.size()) throw InvalidArgument("batch sizes differ");
  if (estimated.empty()) throw InvalidArgument("empty batch");
  LossValue v;
  for (std::size_t u = 0; u < estimated.size(); ++u) {
    check_pair(estimated[u], reference[u]);
    std::unique_ptr<DifferentiableStoi> ref;
    if (objective != Objective::Mse) ref = std::make_unique<DifferentiableStoi>(reference[u]);
    const UtteranceObjective o = utterance_objective(
        objective, alpha, estimated[u].samples, reference[u].samples, ref.get(), nullptr);
    v.total += o.value;
    v.mse_term += o.mse_per_sample;
    v.stoi_term += o.stoi;
  }
  const auto count = static_cast<double>(estimated.size());
  v.total /= count;
  v.mse_term /= count;
  v.stoi_term /= count;
  return v;
}

}  // namespace

LossValue loss_stoi(const std::vector<dsp::SampleBuffer>& estimated,
                    const std::vector<dsp::SampleBuffer>& reference) {
  return batch_loss(estimated, reference, Objective::Stoi, 0.0);
}

LossValue loss_combined(const std::vector<dsp::SampleBuffer>& estimated,
                        const std::vector<dsp::SampleBuffer>& reference, double alpha) {
  if (alpha < 0.0) throw InvalidArgument("alpha must be non-negative");
  return batch_loss(estimated, reference, Objective::Combined, alpha);
}

UtteranceObjective utterance_objective(Objective objective, double alpha,
                                       const Eigen::Ref<const Eigen::VectorXd>& estimate,
                                       const Eigen::Ref<const Eigen::VectorXd>& reference,
                                       const DifferentiableStoi* stoi_ref,
                                       Eigen::VectorXd* grad) {
  if (estimate.size() != reference.size()) throw InvalidArgument("estimate and reference lengths differ");
  if (estimate.size() == 0) throw InvalidArgument("empty utterance");
  const auto length = static_cast<double>(estimate.size());
  const Eigen::VectorXd diff = estimate - reference;
  const double mse_sum = diff.squaredNorm();

  UtteranceObjective o;
  o.mse_per_sample = mse_sum / length;
  if (objective != Objective::Mse) {
    if (stoi_ref == nullptr) throw InvalidArgument("STOI objective needs a reference analyzer");
    Eigen::VectorXd stoi_grad;
    o.stoi = grad ? stoi_ref->value_and_grad(estimate, stoi_grad) : stoi_ref->value(estimate);
    if (grad) *grad = -stoi_grad;
  } else if (grad) {
    *grad = Eigen::VectorXd::Zero(estimate.size());
  }

  switch (objective) {
    case Objective::Mse:
      o.value = mse_sum;
      if (grad) *grad += 2.0 * diff;
      break;
    case Objective::Stoi:
      o.value = -o.stoi;
      break;
    case Objective::Combined:
      o.value = alpha * o.mse_per_sample - o.stoi;
      if (grad && alpha != 0.0) *grad += (2.0 * alpha / length) * diff;
      break;
  }
  return o;
}

}  // namespace easlab::nn
