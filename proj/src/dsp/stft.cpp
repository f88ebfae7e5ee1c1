#include "easlab/dsp/stft.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "easlab/error.hpp"

namespace easlab::dsp {

Eigen::VectorXd make_window(Window kind, int length) {
  if (length <= 0) throw InvalidArgument("window length must be positive");
  Eigen::VectorXd w(length);
  switch (kind) {
    case Window::Hann:
      for (int n = 0; n < length; ++n) {
        w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (n + 0.5) / length);
      }
      break;
    case Window::Rectangular:
      w.setOnes();
      break;
  }
  return w;
}

Eigen::Index frame_count(Eigen::Index length, int frame_len, int hop) {
  if (length < frame_len) return 0;
  return 1 + (length - frame_len) / hop;
}

Spectrogram stft(const SampleBuffer& buffer, const StftConfig& config) {
  if (config.frame_len <= 0 || config.hop <= 0) {
    throw InvalidArgument("frame length and hop must be positive");
  }
  if (config.hop > config.frame_len) throw InvalidArgument("hop exceeds frame length");
  if (config.fft_len < config.frame_len) throw InvalidArgument("fft length below frame length");
  const Eigen::Index frames = frame_count(buffer.size(), config.frame_len, config.hop);
  if (frames == 0) throw InvalidArgument("input shorter than one frame");

  const Eigen::VectorXd w = make_window(config.window, config.frame_len);
  const int bins = config.fft_len / 2 + 1;
  Spectrogram spec;
  spec.frames.resize(frames, bins);
  spec.frame_len = config.frame_len;
  spec.hop = config.hop;
  spec.fft_len = config.fft_len;
  spec.window = config.window;
  spec.sample_rate = buffer.sample_rate;
  spec.signal_length = buffer.size();

  Eigen::FFT<double> fft;
  std::vector<double> time(static_cast<std::size_t>(config.fft_len), 0.0);
  std::vector<std::complex<double>> freq;
  for (Eigen::Index m = 0; m < frames; ++m) {
    const Eigen::Index start = m * config.hop;
    for (int n = 0; n < config.frame_len; ++n) {
      time[static_cast<std::size_t>(n)] = w[n] * buffer.samples[start + n];
    }
    fft.fwd(freq, time);
    for (int k = 0; k < bins; ++k) spec.frames(m, k) = freq[static_cast<std::size_t>(k)];
  }
  return spec;
}

SampleBuffer istft(const Spectrogram& spec) {
  if (spec.hop <= 0 || spec.hop > spec.frame_len || spec.fft_len < spec.frame_len) {
    throw InvalidArgument("inconsistent spectrogram geometry");
  }
  if (spec.n_bins() != spec.fft_len / 2 + 1) throw InvalidArgument("spectrogram bin count mismatch");
  const Eigen::VectorXd w = make_window(spec.window, spec.frame_len);
  const Eigen::Index covered =
      spec.n_frames() == 0 ? 0 : (spec.n_frames() - 1) * spec.hop + spec.frame_len;
  const Eigen::Index length = std::max(covered, spec.signal_length);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(length);
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(length);

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq(static_cast<std::size_t>(spec.fft_len));
  std::vector<double> time;
  for (Eigen::Index m = 0; m < spec.n_frames(); ++m) {
    for (Eigen::Index k = 0; k < spec.n_bins(); ++k) {
      freq[static_cast<std::size_t>(k)] = spec.frames(m, k);
    }
    for (Eigen::Index k = spec.n_bins(); k < spec.fft_len; ++k) {
      freq[static_cast<std::size_t>(k)] = std::conj(spec.frames(m, spec.fft_len - k));
    }
    fft.inv(time, freq);
    const Eigen::Index start = m * spec.hop;
    for (int n = 0; n < spec.frame_len; ++n) {
      out[start + n] += w[n] * time[static_cast<std::size_t>(n)];
      norm[start + n] += w[n] * w[n];
    }
  }
  for (Eigen::Index i = 0; i < covered; ++i) {
    if (norm[i] > 1e-12) out[i] /= norm[i];
  }
  out.conservativeResize(spec.signal_length > 0 ? spec.signal_length : covered);
  return SampleBuffer(std::move(out), spec.sample_rate);
}

}  // namespace easlab::dsp
