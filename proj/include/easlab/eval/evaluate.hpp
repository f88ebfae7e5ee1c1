#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "easlab/dsp/sample_buffer.hpp"
#include "easlab/eval/manifest.hpp"
#include "easlab/eval/methods.hpp"

namespace easlab::eval {

struct ScoreKey {
  std::string noise_id;
  double snr_db = 0.0;
  std::string method;

  auto operator<=>(const ScoreKey&) const = default;
};

struct ScoreCell {
  double mean_stoi = 0.0;
  int n = 0;
};

using ScoreTable = std::map<ScoreKey, ScoreCell>;

struct ItemScore {
  std::string utterance_id;
  std::string noise_id;
  double snr_db = 0.0;
  std::string method;
  double stoi = 0.0;
};

struct EvalConfig {
  std::vector<std::string> methods = {"noisy", "mmse"};
  std::vector<std::string> noises;
  std::vector<double> snrs_db = {-11, -7, -3, 1, 5, 9};
  std::uint64_t seed = 1729;
  int threads = 1;
  Split split = Split::Test;
};

struct EvalResult {
  ScoreTable table;
  std::vector<ItemScore> items;  // utterance, noise, snr, method order
};

// Seed for one (utterance, noise, snr) mixture, independent of run order.
std::uint64_t mixture_seed(std::uint64_t seed, const std::string& utterance_id,
                           const std::string& noise_id, double snr_db);

// Builds the mixture used for a cell; noise is resampled to the clean rate.
dsp::SampleBuffer make_mixture(const dsp::SampleBuffer& clean, const dsp::SampleBuffer& noise,
                               double snr_db, std::uint64_t seed);

EvalResult evaluate_corpus(const Manifest& manifest, const MethodResources& resources,
                           const EvalConfig& config);

}  // namespace easlab::eval
