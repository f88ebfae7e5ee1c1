#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "easlab/eval/manifest.hpp"
#include "easlab/nn/train.hpp"

namespace easlab::eval {

struct TrainingSetSpec {
  std::vector<std::string> noises;  // empty: every train-split noise
  std::vector<double> snrs_db = {0.0};
  int max_utterances = 0;           // 0 = all train utterances, in manifest order
  std::uint64_t seed = 1729;
};

// One pair per (train utterance, noise, snr), mixed with the same per-item
// seeding the evaluation uses. Noises must belong to the train split.
std::vector<nn::UtterancePair> training_pairs(const Manifest& manifest, const TrainingSetSpec& spec);

}  // namespace easlab::eval
