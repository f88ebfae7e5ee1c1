#include "easlab/stoi/stoi.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "easlab/dsp/resample.hpp"
#include "easlab/dsp/stft.hpp"
#include "easlab/error.hpp"

namespace easlab::stoi {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

}  // namespace

void StoiConfig::validate() const {
  if (eval_rate <= 0 || frame_len <= 0 || hop <= 0 || fft_len <= 0) {
    throw InvalidArgument("STOI rates and frame sizes must be positive");
  }
  if (hop > frame_len || fft_len < frame_len) throw InvalidArgument("inconsistent STOI framing");
  if (n_bands < 1) throw InvalidArgument("STOI needs at least one band");
  if (segment_frames < 2) throw InvalidArgument("STOI segments need at least two frames");
  if (!(lowest_center_hz > 0.0) || !(dyn_range_db > 0.0)) {
    throw InvalidArgument("STOI centre frequency and dynamic range must be positive");
  }
}

double StoiConfig::clip_factor() const { return 1.0 + std::pow(10.0, -clip_beta_db / 20.0); }

OctaveBandMatrix third_octave_matrix(const StoiConfig& config) {
  config.validate();
  const int bins = config.fft_len / 2 + 1;
  OctaveBandMatrix m;
  m.weights = Eigen::MatrixXd::Zero(config.n_bands, bins);
  m.centers_hz.resize(config.n_bands);
  m.edges_hz.resize(config.n_bands, 2);
  for (int k = 0; k < config.n_bands; ++k) {
    const double center = config.lowest_center_hz * std::pow(2.0, k / 3.0);
    const double low = center * std::pow(2.0, -1.0 / 6.0);
    const double high = center * std::pow(2.0, 1.0 / 6.0);
    m.centers_hz[k] = center;
    m.edges_hz(k, 0) = low;
    m.edges_hz(k, 1) = high;
    int first = -1, last = -1;
    for (int b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * config.eval_rate / config.fft_len;
      if (f >= low && f < high) {
        m.weights(k, b) = 1.0;
        if (first < 0) first = b;
        last = b + 1;
      }
    }
    if (first < 0) {
      throw InvalidArgument("one-third octave band " + std::to_string(k) + " contains no FFT bin");
    }
    m.bin_ranges.emplace_back(first, last);
  }
  return m;
}

Eigen::Index FrameSelection::output_length() const {
  if (kept_starts.empty()) return 0;
  return static_cast<Eigen::Index>(kept_starts.size() - 1) * hop + frame_len;
}

Eigen::VectorXd FrameSelection::apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != input_length) throw InvalidArgument("frame selection applied to wrong length");
  const Eigen::VectorXd w = dsp::make_window(dsp::Window::Hann, frame_len);
  const Eigen::Index n = output_length();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < kept_starts.size(); ++i) {
    const Eigen::Index at = static_cast<Eigen::Index>(i) * hop;
    out.segment(at, frame_len) += w.cwiseProduct(x.segment(kept_starts[i], frame_len));
    norm.segment(at, frame_len) += w;
  }
  return out.cwiseQuotient(norm);
}

Eigen::VectorXd FrameSelection::adjoint(const Eigen::Ref<const Eigen::VectorXd>& grad_out) const {
  if (grad_out.size() != output_length()) throw InvalidArgument("frame selection adjoint length");
  const Eigen::VectorXd w = dsp::make_window(dsp::Window::Hann, frame_len);
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(grad_out.size());
  for (std::size_t i = 0; i < kept_starts.size(); ++i) {
    norm.segment(static_cast<Eigen::Index>(i) * hop, frame_len) += w;
  }
  const Eigen::VectorXd scaled = grad_out.cwiseQuotient(norm);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(input_length);
  for (std::size_t i = 0; i < kept_starts.size(); ++i) {
    const Eigen::Index at = static_cast<Eigen::Index>(i) * hop;
    g.segment(kept_starts[i], frame_len) += w.cwiseProduct(scaled.segment(at, frame_len));
  }
  return g;
}

FrameSelection select_speech_frames(const Eigen::Ref<const Eigen::VectorXd>& clean,
                                    const StoiConfig& config) {
  config.validate();
  const Eigen::Index frames = dsp::frame_count(clean.size(), config.frame_len, config.hop);
  if (frames == 0) throw InvalidArgument("signal shorter than one STOI frame");
  const Eigen::VectorXd w = dsp::make_window(dsp::Window::Hann, config.frame_len);
  std::vector<double> energy(static_cast<std::size_t>(frames));
  double peak_norm = 0.0;
  for (Eigen::Index m = 0; m < frames; ++m) {
    const double norm = w.cwiseProduct(clean.segment(m * config.hop, config.frame_len)).norm();
    peak_norm = std::max(peak_norm, norm);
    energy[static_cast<std::size_t>(m)] = 20.0 * std::log10(norm + kEps);
  }
  if (peak_norm == 0.0) throw InvalidArgument("clean signal is entirely silent");
  const double peak_db = 20.0 * std::log10(peak_norm + kEps);

  FrameSelection sel;
  sel.frame_len = config.frame_len;
  sel.hop = config.hop;
  sel.input_length = clean.size();
  for (Eigen::Index m = 0; m < frames; ++m) {
    if (energy[static_cast<std::size_t>(m)] > peak_db - config.dyn_range_db) {
      sel.kept_starts.push_back(m * config.hop);
    }
  }
  return sel;
}

std::pair<dsp::SampleBuffer, dsp::SampleBuffer> remove_silent_frames(
    const dsp::SampleBuffer& clean, const dsp::SampleBuffer& processed, const StoiConfig& config) {
  if (clean.size() != processed.size()) throw InvalidArgument("clean and processed lengths differ");
  if (clean.sample_rate != processed.sample_rate) throw InvalidArgument("sample rates differ");
  const FrameSelection sel = select_speech_frames(clean.samples, config);
  return {dsp::SampleBuffer(sel.apply(clean.samples), clean.sample_rate),
          dsp::SampleBuffer(sel.apply(processed.samples), processed.sample_rate)};
}

Eigen::MatrixXcd frame_spectra(const Eigen::Ref<const Eigen::VectorXd>& x,
                               const StoiConfig& config) {
  const Eigen::Index frames = dsp::frame_count(x.size(), config.frame_len, config.hop);
  if (frames == 0) throw InvalidArgument("signal shorter than one STOI frame");
  const Eigen::VectorXd w = dsp::make_window(dsp::Window::Hann, config.frame_len);
  const int bins = config.fft_len / 2 + 1;
  Eigen::MatrixXcd spectra(frames, bins);
  Eigen::FFT<double> fft;
  std::vector<double> time(static_cast<std::size_t>(config.fft_len), 0.0);
  std::vector<std::complex<double>> freq;
  for (Eigen::Index m = 0; m < frames; ++m) {
    for (int n = 0; n < config.frame_len; ++n) {
      time[static_cast<std::size_t>(n)] = w[n] * x[m * config.hop + n];
    }
    fft.fwd(freq, time);
    for (int k = 0; k < bins; ++k) spectra(m, k) = freq[static_cast<std::size_t>(k)];
  }
  return spectra;
}

Eigen::MatrixXd band_envelopes(const Eigen::MatrixXcd& spectra, const OctaveBandMatrix& bands) {
  const Eigen::MatrixXd power = spectra.cwiseAbs2().transpose();  // bins x frames
  return (bands.weights * power).cwiseSqrt();
}

Eigen::MatrixXd band_envelopes(const dsp::SampleBuffer& buffer, const StoiConfig& config) {
  if (buffer.sample_rate != config.eval_rate) {
    throw InvalidArgument("band_envelopes expects input at the evaluation rate");
  }
  return band_envelopes(frame_spectra(buffer.samples, config), third_octave_matrix(config));
}

double segment_correlation(const Eigen::MatrixXd& clean_env, const Eigen::MatrixXd& proc_env,
                           const StoiConfig& config) {
  if (clean_env.rows() != proc_env.rows() || clean_env.cols() != proc_env.cols()) {
    throw InvalidArgument("envelope matrices differ in shape");
  }
  const int n = config.segment_frames;
  const Eigen::Index frames = clean_env.cols();
  if (frames < n) {
    throw InvalidArgument("speech-active signal has " + std::to_string(frames) +
                          " frames, fewer than one segment of " + std::to_string(n));
  }
  const double ceiling = config.clip_factor();
  double total = 0.0;
  for (Eigen::Index m = n; m <= frames; ++m) {
    for (Eigen::Index j = 0; j < clean_env.rows(); ++j) {
      const Eigen::RowVectorXd x = clean_env.block(j, m - n, 1, n);
      const Eigen::RowVectorXd y = proc_env.block(j, m - n, 1, n);
      const double alpha = x.norm() / (y.norm() + kEps);
      const Eigen::RowVectorXd yc = (alpha * y).cwiseMin(ceiling * x);
      const Eigen::RowVectorXd xn = x.array() - x.mean();
      const Eigen::RowVectorXd yn = yc.array() - yc.mean();
      total += (xn / (xn.norm() + kEps)).dot(yn / (yn.norm() + kEps));
    }
  }
  const auto segments = static_cast<double>(frames - n + 1);
  return total / (segments * static_cast<double>(clean_env.rows()));
}

double stoi(const dsp::SampleBuffer& clean, const dsp::SampleBuffer& processed,
            const StoiConfig& config) {
  config.validate();
  if (clean.size() != processed.size()) throw InvalidArgument("clean and processed lengths differ");
  if (clean.sample_rate != processed.sample_rate) throw InvalidArgument("sample rates differ");
  const dsp::Resampler resampler(clean.sample_rate, config.eval_rate);
  const Eigen::VectorXd x = resampler.apply(clean.samples);
  const Eigen::VectorXd y = resampler.apply(processed.samples);
  const FrameSelection sel = select_speech_frames(x, config);
  const OctaveBandMatrix bands = third_octave_matrix(config);
  const Eigen::MatrixXd clean_env = band_envelopes(frame_spectra(sel.apply(x), config), bands);
  const Eigen::MatrixXd proc_env = band_envelopes(frame_spectra(sel.apply(y), config), bands);
  return segment_correlation(clean_env, proc_env, config);
}

}  // namespace easlab::stoi
