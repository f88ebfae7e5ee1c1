#include "easlab/dsp/filter.hpp"

#include <cmath>
#include <numbers>

#include "easlab/error.hpp"

namespace easlab::dsp {
namespace {

using cplx = std::complex<double>;

cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

double prewarp(double hz, double fs) { return 2.0 * fs * std::tan(std::numbers::pi * hz / fs); }

// Unit-cutoff Butterworth prototype poles in the left half plane.
std::vector<cplx> prototype_poles(int order) {
  std::vector<cplx> poles;
  for (int k = 0; k < order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
    poles.emplace_back(std::cos(theta), std::sin(theta));
  }
  return poles;
}

void check_cutoff(double hz, int fs) {
  if (!(hz > 0.0) || hz >= fs / 2.0) {
    throw InvalidArgument("cutoff " + std::to_string(hz) + " Hz outside (0, Nyquist)");
  }
}

// Builds sections from digital poles: each pole with Im > 0 pairs with its
// conjugate, each real pole becomes a first-order section.
FilterCascade sections_from_poles(const std::vector<cplx>& zpoles, double zero_a, double zero_b) {
  FilterCascade c;
  for (const cplx& p : zpoles) {
    if (p.imag() > 1e-12) {
      c.sections.push_back(Biquad{1.0, zero_a, zero_b, -2.0 * p.real(), std::norm(p)});
    }
  }
  for (const cplx& p : zpoles) {
    if (std::abs(p.imag()) <= 1e-12) {
      c.sections.push_back(Biquad{1.0, zero_a == 2.0 ? 1.0 : -1.0, 0.0, -p.real(), 0.0});
    }
  }
  return c;
}

void normalize_at(FilterCascade& c, double freq_hz, double fs) {
  c.overall_gain = 1.0;
  c.overall_gain = 1.0 / std::abs(c.response(freq_hz, fs));
}

}  // namespace

bool FilterCascade::is_stable() const {
  for (const Biquad& s : sections) {
    // roots of z^2 + a1 z + a2
    const cplx disc = std::sqrt(cplx(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
    const cplx r1 = (-s.a1 + disc) / 2.0;
    const cplx r2 = (-s.a1 - disc) / 2.0;
    if (std::abs(r1) >= 1.0 || std::abs(r2) >= 1.0) return false;
  }
  return true;
}

std::complex<double> FilterCascade::response(double freq_hz, double sample_rate) const {
  const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate;
  const cplx z1 = std::polar(1.0, -w);
  const cplx z2 = z1 * z1;
  cplx h = overall_gain;
  for (const Biquad& s : sections) {
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  }
  return h;
}

double FilterCascade::magnitude_db(double freq_hz, double sample_rate) const {
  return 20.0 * std::log10(std::abs(response(freq_hz, sample_rate)));
}

FilterCascade design_butterworth(FilterKind kind, int order, double cutoff_hz, int sample_rate) {
  if (kind == FilterKind::Bandpass) {
    throw InvalidArgument("bandpass needs two edges; use design_butterworth_bandpass");
  }
  if (order < 1) throw InvalidArgument("filter order must be >= 1");
  if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  check_cutoff(cutoff_hz, sample_rate);
  const double fs = sample_rate;
  const double wc = prewarp(cutoff_hz, fs);

  std::vector<cplx> zpoles;
  for (const cplx& p : prototype_poles(order)) {
    const cplx s = kind == FilterKind::Lowpass ? p * wc : wc / p;
    zpoles.push_back(bilinear(s, fs));
  }
  // lowpass zeros at z = -1, highpass at z = +1
  FilterCascade c = kind == FilterKind::Lowpass ? sections_from_poles(zpoles, 2.0, 1.0)
                                                : sections_from_poles(zpoles, -2.0, 1.0);
  normalize_at(c, kind == FilterKind::Lowpass ? 0.0 : fs / 2.0, fs);
  return c;
}

FilterCascade design_butterworth_bandpass(int order, double low_hz, double high_hz,
                                          int sample_rate) {
  if (order < 1) throw InvalidArgument("filter order must be >= 1");
  if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  check_cutoff(low_hz, sample_rate);
  check_cutoff(high_hz, sample_rate);
  if (low_hz >= high_hz) throw InvalidArgument("bandpass low edge must be below high edge");
  const double fs = sample_rate;
  const double wl = prewarp(low_hz, fs);
  const double wh = prewarp(high_hz, fs);
  const double bw = wh - wl;
  const double w0sq = wl * wh;

  std::vector<cplx> zpoles;
  for (const cplx& p : prototype_poles(order)) {
    // roots of s^2 - p bw s + w0^2
    const cplx pb = p * bw;
    const cplx disc = std::sqrt(pb * pb - 4.0 * w0sq);
    zpoles.push_back(bilinear((pb + disc) / 2.0, fs));
    zpoles.push_back(bilinear((pb - disc) / 2.0, fs));
  }
  FilterCascade c;
  std::vector<double> real_poles;
  for (const cplx& p : zpoles) {
    if (p.imag() > 1e-12) {
      c.sections.push_back(Biquad{1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
    } else if (std::abs(p.imag()) <= 1e-12) {
      real_poles.push_back(p.real());
    }
  }
  // A very wide band splits the real prototype pole into two real poles.
  for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
    const double p1 = real_poles[i], p2 = real_poles[i + 1];
    c.sections.push_back(Biquad{1.0, 0.0, -1.0, -(p1 + p2), p1 * p2});
  }
  if (static_cast<int>(c.sections.size()) != order) {
    throw NumericError("bandpass design lost poles");
  }
  // the analog centre sqrt(wl wh) maps back to this digital frequency
  const double f0 = fs / std::numbers::pi * std::atan(std::sqrt(w0sq) / (2.0 * fs));
  normalize_at(c, f0, fs);
  return c;
}

FilterCascade design_first_order_shelf(double zero_hz, double pole_hz, int sample_rate) {
  if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  check_cutoff(zero_hz, sample_rate);
  check_cutoff(pole_hz, sample_rate);
  const double fs = sample_rate;
  const double wz = prewarp(zero_hz, fs);
  const double wp = prewarp(pole_hz, fs);
  // H(s) = (wp / wz) (s + wz) / (s + wp); bilinear s = 2 fs (1 - z^-1) / (1 + z^-1)
  const double k = 2.0 * fs;
  const double g = wp / wz;
  const double a0 = k + wp;
  Biquad s;
  s.b0 = g * (k + wz) / a0;
  s.b1 = g * (wz - k) / a0;
  s.b2 = 0.0;
  s.a1 = (wp - k) / a0;
  s.a2 = 0.0;
  FilterCascade c;
  c.sections.push_back(s);
  return c;
}

Eigen::VectorXd apply_filter(const FilterCascade& cascade,
                             const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (!cascade.is_stable()) throw InvalidArgument("filter cascade is unstable");
  Eigen::VectorXd y = x * cascade.overall_gain;
  for (const Biquad& s : cascade.sections) {
    double z1 = 0.0, z2 = 0.0;
    for (Eigen::Index n = 0; n < y.size(); ++n) {
      const double in = y[n];
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      y[n] = out;
    }
  }
  return y;
}

SampleBuffer apply_filter(const FilterCascade& cascade, const SampleBuffer& buffer) {
  return SampleBuffer(apply_filter(cascade, buffer.samples), buffer.sample_rate);
}

}  // namespace easlab::dsp
