#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "easlab/dsp/sample_buffer.hpp"

namespace easlab::stoi {

struct StoiConfig {
  int eval_rate = 10000;
  int frame_len = 256;
  int hop = 128;
  int fft_len = 512;
  int n_bands = 15;
  double lowest_center_hz = 150.0;
  int segment_frames = 30;
  double dyn_range_db = 40.0;
  double clip_beta_db = -15.0;

  void validate() const;
  // 1 + 10^(-beta/20): the clipping ceiling relative to the clean envelope.
  double clip_factor() const;
};

// One-third octave analysis. Band k is centred at lowest * 2^(k/3) with
// edges centre * 2^(-+1/6); an FFT bin belongs to a band when its centre
// frequency lies in [low, high).
struct OctaveBandMatrix {
  Eigen::MatrixXd weights;   // n_bands x n_bins, entries 0 or 1
  Eigen::VectorXd centers_hz;
  Eigen::MatrixX2d edges_hz;  // (low, high) per band
  std::vector<std::pair<int, int>> bin_ranges;  // [first, last) per band
};

OctaveBandMatrix third_octave_matrix(const StoiConfig& config = {});

// Frames of the clean signal retained after silent-frame removal. The same
// selection is applied to both signals, and the result is the overlap-add
// of the retained Hann-windowed frames normalized by the summed window, so
// nothing is removed => output equals input over the framed span.
struct FrameSelection {
  std::vector<Eigen::Index> kept_starts;
  int frame_len = 0;
  int hop = 0;
  Eigen::Index input_length = 0;

  Eigen::Index output_length() const;
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd adjoint(const Eigen::Ref<const Eigen::VectorXd>& grad_out) const;
};

// `clean` must already be at config.eval_rate. Throws on all-silent input
// or input shorter than one frame.
FrameSelection select_speech_frames(const Eigen::Ref<const Eigen::VectorXd>& clean,
                                    const StoiConfig& config = {});

std::pair<dsp::SampleBuffer, dsp::SampleBuffer> remove_silent_frames(
    const dsp::SampleBuffer& clean, const dsp::SampleBuffer& processed,
    const StoiConfig& config = {});

// Hann-windowed, zero-padded spectra of consecutive frames: n_frames x n_bins.
Eigen::MatrixXcd frame_spectra(const Eigen::Ref<const Eigen::VectorXd>& x,
                               const StoiConfig& config = {});

// Entry (j, m): sqrt of the summed squared magnitudes of frame m over band j.
Eigen::MatrixXd band_envelopes(const Eigen::MatrixXcd& spectra, const OctaveBandMatrix& bands);
Eigen::MatrixXd band_envelopes(const dsp::SampleBuffer& buffer, const StoiConfig& config = {});

// Normalization, clipping and segment correlation averaged over every band
// and every window of segment_frames consecutive frames.
double segment_correlation(const Eigen::MatrixXd& clean_env, const Eigen::MatrixXd& proc_env,
                           const StoiConfig& config = {});

// Full measure. Inputs must share length and rate; any rate is resampled to
// config.eval_rate. Throws when the speech-active part is shorter than one segment.
double stoi(const dsp::SampleBuffer& clean, const dsp::SampleBuffer& processed,
            const StoiConfig& config = {});

}  // namespace easlab::stoi
