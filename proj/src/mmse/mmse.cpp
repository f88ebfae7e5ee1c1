#include "easlab/mmse/mmse.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "easlab/error.hpp"

namespace easlab::mmse {
namespace {

constexpr double kAsymptoticSwitch = 25.0;  // x = v/2, i.e. v = 50

double series_scaled(int order, double x) {
  // I_n(x) = sum_k (x/2)^(2k+n) / (k! (k+n)!)
  const double half = x / 2.0;
  double term = order == 0 ? 1.0 : half;
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= half * half / (static_cast<double>(k) * (k + order));
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum * std::exp(-x);
}

double asymptotic_scaled(int order, double x) {
  // e^-x I_n(x) ~ 1/sqrt(2 pi x) sum_k (-1)^k a_k(n) / x^k
  const double mu = 4.0 * order * order;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 40; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (k * 8.0 * x);
    if (std::abs(next) > std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

}  // namespace

void MmseConfig::validate() const {
  if (frame_len <= 0 || hop <= 0 || hop > frame_len) throw InvalidArgument("bad MMSE framing");
  if (!(dd_alpha > 0.0 && dd_alpha < 1.0)) throw InvalidArgument("dd_alpha must be in (0, 1)");
  if (noise_init_frames < 1) throw InvalidArgument("noise_init_frames must be >= 1");
  if (!(gain_floor >= 0.0 && gain_floor < 1.0)) throw InvalidArgument("gain_floor must be in [0, 1)");
}

NoisePsd estimate_noise_psd(const dsp::Spectrogram& noisy, int n_frames) {
  if (n_frames < 1) throw InvalidArgument("noise estimate needs at least one frame");
  if (n_frames > noisy.n_frames()) {
    throw InvalidArgument("noise estimate requests " + std::to_string(n_frames) +
                          " frames but only " + std::to_string(noisy.n_frames()) + " exist");
  }
  return noisy.frames.topRows(n_frames).cwiseAbs2().colwise().mean().transpose();
}

double bessel_i0e(double x) {
  if (x < 0.0) throw InvalidArgument("bessel_i0e needs x >= 0");
  return x < kAsymptoticSwitch ? series_scaled(0, x) : asymptotic_scaled(0, x);
}

double bessel_i1e(double x) {
  if (x < 0.0) throw InvalidArgument("bessel_i1e needs x >= 0");
  return x < kAsymptoticSwitch ? series_scaled(1, x) : asymptotic_scaled(1, x);
}

double mmse_gain(double xi, double gamma) {
  if (!(xi > 0.0) || !(gamma > 0.0)) throw InvalidArgument("mmse_gain needs xi > 0 and gamma > 0");
  const double v = gamma * (xi / (1.0 + xi));
  const double half = v / 2.0;
  return std::sqrt(std::numbers::pi) / 2.0 * std::sqrt(v) / gamma *
         ((1.0 + v) * bessel_i0e(half) + v * bessel_i1e(half));
}

dsp::SampleBuffer enhance_mmse(const dsp::SampleBuffer& noisy, const MmseConfig& config) {
  config.validate();
  const Eigen::Index needed =
      static_cast<Eigen::Index>(config.noise_init_frames) * config.hop + config.frame_len;
  if (noisy.size() < needed) {
    throw InvalidArgument("input too short for MMSE: needs " + std::to_string(needed) + " samples");
  }
  const dsp::StftConfig stft_config{config.frame_len, config.hop, config.frame_len, config.window};
  const double xi_min = std::pow(10.0, config.xi_min_db / 10.0);

  return dsp::process_spectrum(noisy, stft_config, [&](dsp::Spectrogram& spec) {
    const NoisePsd noise = estimate_noise_psd(spec, config.noise_init_frames);
    if (!(noise.maxCoeff() > 0.0)) throw InvalidArgument("noise PSD is zero in every bin: silent input");
    const Eigen::Index bins = spec.n_bins();
    // previous frame's estimated clean power over noise power, G^2 gamma
    Eigen::VectorXd prev_snr = Eigen::VectorXd::Ones(bins);
    for (Eigen::Index m = 0; m < spec.n_frames(); ++m) {
      for (Eigen::Index k = 0; k < bins; ++k) {
        const std::complex<double> y = spec.frames(m, k);
        const double power = std::norm(y);
        if (noise[k] <= 0.0) {
          prev_snr[k] = 1.0;
          continue;  // nothing to suppress in a bin with no noise
        }
        const double gamma = std::max(power / noise[k], 1e-10);
        double xi = m == 0 ? std::max(gamma - 1.0, 0.0)
                           : config.dd_alpha * prev_snr[k] +
                                 (1.0 - config.dd_alpha) * std::max(gamma - 1.0, 0.0);
        xi = std::max(xi, xi_min);
        const double g = mmse_gain(xi, gamma);
        prev_snr[k] = g * g * gamma;
        spec.frames(m, k) = std::max(g, config.gain_floor) * y;
      }
    }
  });
}

}  // namespace easlab::mmse
