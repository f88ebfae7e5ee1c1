#pragma once

#include <Eigen/Core>

#include "easlab/dsp/sample_buffer.hpp"
#include "easlab/dsp/stft.hpp"

namespace easlab::mmse {

struct MmseConfig {
  int frame_len = 512;  // 32 ms at 16 kHz
  int hop = 256;
  dsp::Window window = dsp::Window::Hann;
  double dd_alpha = 0.98;
  double xi_min_db = -15.0;
  int noise_init_frames = 6;
  double gain_floor = 0.05;

  void validate() const;
};

// Per-bin noise power, averaged over leading frames.
using NoisePsd = Eigen::VectorXd;

NoisePsd estimate_noise_psd(const dsp::Spectrogram& noisy, int n_frames);

// exp(-x) I0(x) and exp(-x) I1(x): power series below x = 25, asymptotic
// expansion above.
double bessel_i0e(double x);
double bessel_i1e(double x);

// Short-time spectral amplitude gain for a-priori SNR xi and a-posteriori
// SNR gamma (both linear, > 0):
//   G = (sqrt(pi)/2) (sqrt(v)/gamma) exp(-v/2) [(1+v) I0(v/2) + v I1(v/2)],
//   v = xi gamma / (1 + xi).
double mmse_gain(double xi, double gamma);

dsp::SampleBuffer enhance_mmse(const dsp::SampleBuffer& noisy, const MmseConfig& config = {});

}  // namespace easlab::mmse
