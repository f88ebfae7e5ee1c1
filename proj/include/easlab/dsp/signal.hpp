#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "easlab/dsp/sample_buffer.hpp"

namespace easlab::dsp {

template <typename Derived>
double rms(const Eigen::MatrixBase<Derived>& x) {
  if (x.size() == 0) return 0.0;
  return std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
}

inline double rms(const SampleBuffer& buffer) { return rms(buffer.samples); }

template <typename DerivedA, typename DerivedB>
double snr_db(const Eigen::MatrixBase<DerivedA>& signal, const Eigen::MatrixBase<DerivedB>& noise) {
  return 10.0 * std::log10(signal.squaredNorm() / noise.squaredNorm());
}

// Throws when the buffer is all zero and target_rms is nonzero.
SampleBuffer scale_to_rms(const SampleBuffer& buffer, double target_rms);

struct NoisyMixture {
  SampleBuffer clean;
  SampleBuffer noise_segment;  // already scaled
  SampleBuffer mixture;
  double target_snr_db = 0.0;
  double achieved_snr_db = 0.0;
  Eigen::Index noise_offset = 0;
  double noise_scale = 1.0;
};

// Crops `noise` at a seeded uniform offset, scales it to the requested SNR
// relative to `clean`, and adds it.
NoisyMixture mix_at_snr(const SampleBuffer& clean, const SampleBuffer& noise, double snr_db,
                        std::uint64_t seed);

SampleBuffer normalize_zero_mean_unit_var(const SampleBuffer& buffer);

// Trims both buffers to the shorter length.
void trim_to_common_length(SampleBuffer& a, SampleBuffer& b);

}  // namespace easlab::dsp
