#include "easlab/vocoder/eas_vocoder.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "easlab/dsp/signal.hpp"
#include "easlab/error.hpp"
#include "easlab/hash.hpp"

namespace easlab::vocoder {
namespace {

using nlohmann::json;

constexpr double kSlopeLowHz = 3000.0;
constexpr double kSlopeHighHz = 6000.0;

// A first-order shelf cannot hold a half-order slope everywhere, so the pole
// is tuned until the 3-6 kHz rise matches the target.
dsp::FilterCascade design_preemphasis(const EasVocoderConfig& config, int sample_rate) {
  const double nyquist = 0.5 * sample_rate;
  auto slope = [&](double pole) {
    const dsp::FilterCascade c =
        dsp::design_first_order_shelf(config.preemph_corner_hz, pole, sample_rate);
    return c.magnitude_db(kSlopeHighHz, sample_rate) - c.magnitude_db(kSlopeLowHz, sample_rate);
  };
  double lo = config.preemph_corner_hz * 1.0001;
  double hi = nyquist * 0.9999;
  if (kSlopeHighHz >= nyquist) throw InvalidArgument("pre-emphasis needs a sample rate above 12 kHz");
  if (slope(hi) < config.preemph_slope_db || slope(lo) > config.preemph_slope_db) {
    throw InvalidArgument("pre-emphasis slope unreachable at this sample rate");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-9; ++i) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) < config.preemph_slope_db ? lo : hi) = mid;
  }
  return dsp::design_first_order_shelf(config.preemph_corner_hz, 0.5 * (lo + hi), sample_rate);
}

EasFilterBank bank_for(const dsp::SampleBuffer& y, const EasVocoderConfig& config) {
  dsp::validate(y);
  return EasFilterBank::design(config, y.sample_rate);
}

ChannelEnvelopes envelopes_with(const EasFilterBank& bank, const Eigen::VectorXd& emphasized) {
  ChannelEnvelopes env(static_cast<Eigen::Index>(bank.bands.size()), emphasized.size());
  for (std::size_t n = 0; n < bank.bands.size(); ++n) {
    const Eigen::VectorXd rectified = dsp::apply_filter(bank.bands[n], emphasized).cwiseAbs();
    env.row(static_cast<Eigen::Index>(n)) =
        dsp::apply_filter(bank.envelope, rectified).cwiseMax(0.0).transpose();
  }
  return env;
}

Eigen::VectorXd electric_with(const EasFilterBank& bank, const ChannelEnvelopes& env,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(env.cols());
  Eigen::VectorXd carrier(env.cols());
  for (Eigen::Index n = 0; n < env.rows(); ++n) {
    for (double& c : carrier) c = gauss(rng);
    const Eigen::VectorXd modulated = env.row(n).transpose().cwiseProduct(carrier);
    sum += dsp::apply_filter(bank.bands[static_cast<std::size_t>(n)], modulated);
  }
  return sum;
}

template <typename T>
void read_if(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

void EasVocoderConfig::validate(int sample_rate) const {
  const double nyquist = 0.5 * sample_rate;
  auto cutoff = [&](double f, const char* what) {
    if (!(f > 0.0 && f < nyquist)) {
      throw InvalidArgument(std::string(what) + " must lie in (0, Nyquist)");
    }
  };
  cutoff(acoustic_cutoff_hz, "acoustic cutoff");
  cutoff(preemph_corner_hz, "pre-emphasis corner");
  cutoff(env_cutoff_hz, "envelope cutoff");
  if (acoustic_order < 1 || band_order < 1 || env_order < 1) {
    throw InvalidArgument("filter orders must be >= 1");
  }
  if (preemph_slope_db <= 0.0) throw InvalidArgument("pre-emphasis slope must be positive");
  if (band_edges_hz.empty()) throw InvalidArgument("vocoder needs at least one channel");
  double prev_high = 0.0;
  for (const auto& [low, high] : band_edges_hz) {
    cutoff(low, "band edge");
    cutoff(high, "band edge");
    if (!(low < high)) throw InvalidArgument("band edges must be increasing within a band");
    if (low < prev_high) throw InvalidArgument("bands must not overlap");
    prev_high = high;
  }
}

EasVocoderConfig parse_vocoder_config(std::string_view json_text) {
  EasVocoderConfig c;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) throw InvalidArgument("vocoder config must be a JSON object");
    read_if(j, "acoustic_cutoff_hz", c.acoustic_cutoff_hz);
    read_if(j, "acoustic_order", c.acoustic_order);
    read_if(j, "preemph_corner_hz", c.preemph_corner_hz);
    read_if(j, "preemph_slope_db", c.preemph_slope_db);
    read_if(j, "band_edges_hz", c.band_edges_hz);
    read_if(j, "band_order", c.band_order);
    read_if(j, "env_cutoff_hz", c.env_cutoff_hz);
    read_if(j, "env_order", c.env_order);
    read_if(j, "rng_seed", c.rng_seed);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad vocoder config: ") + e.what());
  }
  return c;
}

EasVocoderConfig load_vocoder_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocoder config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_vocoder_config(ss.str());
}

std::string to_json(const EasVocoderConfig& c) {
  const json j = {{"acoustic_cutoff_hz", c.acoustic_cutoff_hz},
                  {"acoustic_order", c.acoustic_order},
                  {"preemph_corner_hz", c.preemph_corner_hz},
                  {"preemph_slope_db", c.preemph_slope_db},
                  {"band_edges_hz", c.band_edges_hz},
                  {"band_order", c.band_order},
                  {"env_cutoff_hz", c.env_cutoff_hz},
                  {"env_order", c.env_order},
                  {"rng_seed", c.rng_seed}};
  return j.dump(2);
}

EasFilterBank EasFilterBank::design(const EasVocoderConfig& config, int sample_rate) {
  config.validate(sample_rate);
  EasFilterBank b;
  b.sample_rate = sample_rate;
  b.acoustic = dsp::design_butterworth(dsp::FilterKind::Lowpass, config.acoustic_order,
                                       config.acoustic_cutoff_hz, sample_rate);
  b.preemphasis = design_preemphasis(config, sample_rate);
  for (const auto& [low, high] : config.band_edges_hz) {
    b.bands.push_back(dsp::design_butterworth_bandpass(config.band_order, low, high, sample_rate));
  }
  b.envelope = dsp::design_butterworth(dsp::FilterKind::Lowpass, config.env_order,
                                       config.env_cutoff_hz, sample_rate);
  return b;
}

std::uint64_t carrier_seed(std::uint64_t rng_seed, std::string_view utterance_id) {
  return rng_seed ^ fnv1a64(utterance_id);
}

dsp::SampleBuffer acoustic_path(const dsp::SampleBuffer& y, const EasVocoderConfig& config) {
  return dsp::apply_filter(bank_for(y, config).acoustic, y);
}

dsp::SampleBuffer preemphasize(const dsp::SampleBuffer& y, const EasVocoderConfig& config) {
  return dsp::apply_filter(bank_for(y, config).preemphasis, y);
}

ChannelEnvelopes channel_envelopes(const dsp::SampleBuffer& y, const EasVocoderConfig& config) {
  return envelopes_with(bank_for(y, config), y.samples);
}

dsp::SampleBuffer electric_path(const dsp::SampleBuffer& y, const EasVocoderConfig& config,
                                std::string_view utterance_id) {
  const EasFilterBank bank = bank_for(y, config);
  const ChannelEnvelopes env =
      envelopes_with(bank, dsp::apply_filter(bank.preemphasis, y.samples));
  return {electric_with(bank, env, carrier_seed(config.rng_seed, utterance_id)), y.sample_rate};
}

VocodeResult vocode_eas(const dsp::SampleBuffer& y, const EasVocoderConfig& config,
                        std::string_view utterance_id) {
  const EasFilterBank bank = bank_for(y, config);
  VocodeResult r;
  r.envelopes = envelopes_with(bank, dsp::apply_filter(bank.preemphasis, y.samples));
  const double target = dsp::rms(y);
  if (target == 0.0) {
    r.output = dsp::SampleBuffer(Eigen::VectorXd::Zero(y.size()), y.sample_rate);
    r.silent_input = true;
    return r;
  }
  const Eigen::VectorXd combined =
      dsp::apply_filter(bank.acoustic, y.samples) +
      electric_with(bank, r.envelopes, carrier_seed(config.rng_seed, utterance_id));
  r.output = dsp::scale_to_rms(dsp::SampleBuffer(combined, y.sample_rate), target);
  return r;
}

void write_envelopes_csv(const ChannelEnvelopes& envelopes, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot write envelope file " + path.string());
  char buf[32];
  std::string line;
  for (Eigen::Index n = 0; n < envelopes.rows(); ++n) {
    line.clear();
    for (Eigen::Index t = 0; t < envelopes.cols(); ++t) {
      if (t) line += ',';
      std::snprintf(buf, sizeof buf, "%.9g", envelopes(n, t));
      line += buf;
    }
    line += '\n';
    std::fputs(line.c_str(), f);
  }
  if (std::fclose(f) != 0) throw IoError("failed writing envelope file " + path.string());
}

}  // namespace easlab::vocoder
