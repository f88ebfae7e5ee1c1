#pragma once

#include <algorithm>
#include <complex>

#include <Eigen/Core>

#include "easlab/dsp/sample_buffer.hpp"

namespace easlab::dsp {

// Hann here is the half-sample-offset form 0.5 - 0.5 cos(2 pi (n + 0.5) / N):
// symmetric, strictly positive, and sums to exactly 1 at 50% overlap.
enum class Window { Hann, Rectangular };

Eigen::VectorXd make_window(Window kind, int length);

struct StftConfig {
  int frame_len = 512;
  int hop = 256;
  int fft_len = 512;
  Window window = Window::Hann;
};

struct Spectrogram {
  Eigen::MatrixXcd frames;  // n_frames x (fft_len / 2 + 1)
  int frame_len = 0;
  int hop = 0;
  int fft_len = 0;
  Window window = Window::Hann;
  int sample_rate = 0;
  Eigen::Index signal_length = 0;

  Eigen::Index n_frames() const { return frames.rows(); }
  Eigen::Index n_bins() const { return frames.cols(); }
};

// Frames start at 0 and advance by hop; a trailing partial frame is dropped.
Eigen::Index frame_count(Eigen::Index length, int frame_len, int hop);

Spectrogram stft(const SampleBuffer& buffer, const StftConfig& config);

// Weighted overlap-add with the analysis window as synthesis window,
// normalized by the summed squared window. Samples past the last frame are zero.
SampleBuffer istft(const Spectrogram& spec);

// Zero-pads so that frames cover every sample, runs `process` on the
// spectrogram, and trims back to the input length.
template <typename Fn>
SampleBuffer process_spectrum(const SampleBuffer& buffer, const StftConfig& config, Fn&& process) {
  const Eigen::Index n = buffer.size();
  Eigen::Index padded = std::max<Eigen::Index>(n, config.frame_len);
  const Eigen::Index over = (padded - config.frame_len) % config.hop;
  if (over != 0) padded += config.hop - over;
  SampleBuffer work(Eigen::VectorXd::Zero(padded), buffer.sample_rate);
  work.samples.head(n) = buffer.samples;
  Spectrogram spec = stft(work, config);
  process(spec);
  SampleBuffer out = istft(spec);
  out.samples.conservativeResize(n);
  return out;
}

}  // namespace easlab::dsp
