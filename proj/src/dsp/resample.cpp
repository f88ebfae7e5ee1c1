#include "easlab/dsp/resample.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "easlab/error.hpp"

namespace easlab::dsp {
namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double kaiser(double u, double beta) {
  if (std::abs(u) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - u * u)) / std::cyl_bessel_i(0.0, beta);
}

}  // namespace

Resampler::Resampler(int source_rate, int target_rate)
    : source_rate_(source_rate), target_rate_(target_rate) {
  if (source_rate <= 0 || target_rate <= 0) {
    throw InvalidArgument("resampling rates must be positive");
  }
  const int g = std::gcd(source_rate, target_rate);
  up_ = target_rate / g;
  down_ = source_rate / g;

  // Output n sits at source position n * down / up. Its fractional part
  // takes `up_` distinct values, one tap set per value.
  const double cutoff = std::min(1.0, static_cast<double>(target_rate) / source_rate);
  const double half = kTaps / 2.0;
  phase_taps_.resize(static_cast<std::size_t>(up_));
  for (int p = 0; p < up_; ++p) {
    const double frac = static_cast<double>(p) / up_;
    Eigen::VectorXd taps(kTaps);
    for (int j = 0; j < kTaps; ++j) {
      // tap j reads source index floor(t) - (kTaps/2 - 1) + j
      const double dist = frac + (half - 1.0) - j;
      taps[j] = cutoff * sinc(cutoff * dist) * kaiser(dist / half, kKaiserBeta);
    }
    taps /= taps.sum();
    phase_taps_[static_cast<std::size_t>(p)] = std::move(taps);
  }
}

Eigen::Index Resampler::output_length(Eigen::Index n) const {
  return (n * target_rate_ + source_rate_ / 2) / source_rate_;
}

Eigen::Index Resampler::first_tap(Eigen::Index n) const {
  return (n * down_) / up_ - (kTaps / 2 - 1);
}

int Resampler::phase(Eigen::Index n) const { return static_cast<int>((n * down_) % up_); }

Eigen::VectorXd Resampler::apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (identity()) return x;
  const Eigen::Index len = x.size();
  Eigen::VectorXd y(output_length(len));
  for (Eigen::Index n = 0; n < y.size(); ++n) {
    const Eigen::VectorXd& taps = phase_taps_[static_cast<std::size_t>(phase(n))];
    const Eigen::Index start = first_tap(n);
    if (start >= 0 && start + kTaps <= len) {
      y[n] = taps.dot(x.segment(start, kTaps));
    } else {
      double acc = 0.0;
      for (int j = 0; j < kTaps; ++j) {
        const Eigen::Index k = start + j;
        if (k >= 0 && k < len) acc += taps[j] * x[k];
      }
      y[n] = acc;
    }
  }
  return y;
}

Eigen::VectorXd Resampler::adjoint(const Eigen::Ref<const Eigen::VectorXd>& grad_out,
                                   Eigen::Index input_length) const {
  if (identity()) return grad_out;
  if (grad_out.size() != output_length(input_length)) {
    throw InvalidArgument("resampler adjoint: gradient length does not match output length");
  }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(input_length);
  for (Eigen::Index n = 0; n < grad_out.size(); ++n) {
    const Eigen::VectorXd& taps = phase_taps_[static_cast<std::size_t>(phase(n))];
    const Eigen::Index start = first_tap(n);
    if (start >= 0 && start + kTaps <= input_length) {
      g.segment(start, kTaps) += grad_out[n] * taps;
    } else {
      for (int j = 0; j < kTaps; ++j) {
        const Eigen::Index k = start + j;
        if (k >= 0 && k < input_length) g[k] += taps[j] * grad_out[n];
      }
    }
  }
  return g;
}

SampleBuffer resample(const SampleBuffer& buffer, int target_rate) {
  if (target_rate <= 0) throw InvalidArgument("target rate must be positive");
  if (target_rate == buffer.sample_rate) return buffer;
  const Resampler r(buffer.sample_rate, target_rate);
  return SampleBuffer(r.apply(buffer.samples), target_rate);
}

}  // namespace easlab::dsp
