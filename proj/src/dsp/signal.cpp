#include "easlab/dsp/signal.hpp"

#include <random>

#include "easlab/error.hpp"

namespace easlab::dsp {

SampleBuffer scale_to_rms(const SampleBuffer& buffer, double target_rms) {
  if (target_rms < 0.0) throw InvalidArgument("target RMS must be non-negative");
  const double current = rms(buffer);
  if (target_rms == 0.0) return SampleBuffer(Eigen::VectorXd::Zero(buffer.size()), buffer.sample_rate);
  if (current == 0.0) throw InvalidArgument("cannot scale a silent buffer to nonzero RMS");
  return SampleBuffer(buffer.samples * (target_rms / current), buffer.sample_rate);
}

NoisyMixture mix_at_snr(const SampleBuffer& clean, const SampleBuffer& noise, double snr_db,
                        std::uint64_t seed) {
  if (clean.empty()) throw InvalidArgument("clean signal is empty");
  if (clean.sample_rate != noise.sample_rate) {
    throw InvalidArgument("sample rate mismatch between clean and noise");
  }
  if (noise.size() < clean.size()) throw InvalidArgument("noise is shorter than the clean signal");
  const double clean_rms = rms(clean);
  if (clean_rms == 0.0) throw InvalidArgument("clean signal is silent");

  NoisyMixture m;
  const Eigen::Index n = clean.size();
  const Eigen::Index slack = noise.size() - n;
  if (slack > 0) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, slack);
    m.noise_offset = pick(rng);
  }
  Eigen::VectorXd segment = noise.samples.segment(m.noise_offset, n);
  const double noise_rms = rms(segment);
  if (noise_rms == 0.0) throw InvalidArgument("noise segment is silent");

  m.noise_scale = clean_rms / noise_rms * std::pow(10.0, -snr_db / 20.0);
  segment *= m.noise_scale;
  m.clean = clean;
  m.mixture = SampleBuffer(clean.samples + segment, clean.sample_rate);
  m.noise_segment = SampleBuffer(std::move(segment), clean.sample_rate);
  m.target_snr_db = snr_db;
  m.achieved_snr_db = dsp::snr_db(clean.samples, m.noise_segment.samples);
  return m;
}

SampleBuffer normalize_zero_mean_unit_var(const SampleBuffer& buffer) {
  if (buffer.empty()) throw InvalidArgument("cannot normalize an empty buffer");
  const double mean = buffer.samples.mean();
  Eigen::VectorXd centered = buffer.samples.array() - mean;
  const double var = centered.squaredNorm() / static_cast<double>(centered.size());
  if (!(var > 0.0)) throw InvalidArgument("cannot normalize a constant signal");
  return SampleBuffer(centered / std::sqrt(var), buffer.sample_rate);
}

void trim_to_common_length(SampleBuffer& a, SampleBuffer& b) {
  const Eigen::Index n = std::min(a.size(), b.size());
  a.samples.conservativeResize(n);
  b.samples.conservativeResize(n);
}

}  // namespace easlab::dsp
