#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "easlab/dsp/sample_buffer.hpp"

namespace easlab::dsp {

// y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct FilterCascade {
  std::vector<Biquad> sections;
  double overall_gain = 1.0;

  bool is_stable() const;
  std::complex<double> response(double freq_hz, double sample_rate) const;
  double magnitude_db(double freq_hz, double sample_rate) const;
};

enum class FilterKind { Lowpass, Highpass, Bandpass };

// Butterworth designs realized as second-order sections through the
// bilinear transform with frequency pre-warping. For Bandpass, `order` is
// the prototype order, so the cascade has `order` sections (2*order poles).
FilterCascade design_butterworth(FilterKind kind, int order, double cutoff_hz, int sample_rate);
FilterCascade design_butterworth_bandpass(int order, double low_hz, double high_hz,
                                          int sample_rate);

// Analog first-order section (s + zero) / (s + pole), scaled to unity at DC,
// mapped through the bilinear transform. Frequencies in Hz.
FilterCascade design_first_order_shelf(double zero_hz, double pole_hz, int sample_rate);

// Causal forward filtering, Direct Form II transposed per section.
Eigen::VectorXd apply_filter(const FilterCascade& cascade,
                             const Eigen::Ref<const Eigen::VectorXd>& x);
SampleBuffer apply_filter(const FilterCascade& cascade, const SampleBuffer& buffer);

}  // namespace easlab::dsp
