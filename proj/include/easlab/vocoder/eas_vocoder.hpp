#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "easlab/dsp/filter.hpp"
#include "easlab/dsp/sample_buffer.hpp"

namespace easlab::vocoder {

struct EasVocoderConfig {
  double acoustic_cutoff_hz = 500.0;
  int acoustic_order = 6;
  double preemph_corner_hz = 2000.0;
  double preemph_slope_db = 3.0;  // gain rise from 3 kHz to 6 kHz
  std::vector<std::pair<double, double>> band_edges_hz = {
      {500.0, 1017.0}, {1017.0, 1901.0}, {1901.0, 3414.0}, {3414.0, 7000.0}};
  int band_order = 6;
  double env_cutoff_hz = 400.0;
  int env_order = 4;
  std::uint64_t rng_seed = 1729;

  int n_channels() const { return static_cast<int>(band_edges_hz.size()); }
  void validate(int sample_rate) const;
};

// JSON keys mirror the field names; missing keys keep their defaults.
EasVocoderConfig parse_vocoder_config(std::string_view json_text);
EasVocoderConfig load_vocoder_config(const std::filesystem::path& path);
std::string to_json(const EasVocoderConfig& config);

// All filters for one sample rate, designed once.
struct EasFilterBank {
  int sample_rate = 16000;
  dsp::FilterCascade acoustic;
  dsp::FilterCascade preemphasis;
  std::vector<dsp::FilterCascade> bands;
  dsp::FilterCascade envelope;

  static EasFilterBank design(const EasVocoderConfig& config, int sample_rate);
};

// Row n is the envelope of channel n at the audio rate; entries >= 0.
using ChannelEnvelopes = Eigen::MatrixXd;

dsp::SampleBuffer acoustic_path(const dsp::SampleBuffer& y, const EasVocoderConfig& config);
dsp::SampleBuffer preemphasize(const dsp::SampleBuffer& y, const EasVocoderConfig& config);
// Expects already pre-emphasized input.
ChannelEnvelopes channel_envelopes(const dsp::SampleBuffer& y, const EasVocoderConfig& config);
// Pre-emphasis, envelopes, noise modulation and re-filtering, channels summed.
// Carriers depend on rng_seed and utterance_id.
dsp::SampleBuffer electric_path(const dsp::SampleBuffer& y, const EasVocoderConfig& config,
                                std::string_view utterance_id = {});

struct VocodeResult {
  dsp::SampleBuffer output;
  ChannelEnvelopes envelopes;
  bool silent_input = false;  // output left silent; nothing to match
};

VocodeResult vocode_eas(const dsp::SampleBuffer& y, const EasVocoderConfig& config,
                        std::string_view utterance_id = {});

std::uint64_t carrier_seed(std::uint64_t rng_seed, std::string_view utterance_id);

// One row per channel, comma separated.
void write_envelopes_csv(const ChannelEnvelopes& envelopes, const std::filesystem::path& path);

}  // namespace easlab::vocoder
