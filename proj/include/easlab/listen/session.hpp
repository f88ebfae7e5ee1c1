#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "easlab/eval/manifest.hpp"
#include "easlab/eval/methods.hpp"
#include "easlab/vocoder/eas_vocoder.hpp"

namespace easlab::listen {

struct ListenConfig {
  std::vector<std::string> noises = {"engine", "street"};
  std::vector<std::string> methods = {"noisy", "mmse", "ddae", "fcn"};
  int utterances_per_condition = 10;
  std::vector<double> allowed_snrs_db = {-3.0, 1.0};
  int max_plays = 2;  // original plus one repeat

  int n_conditions() const { return static_cast<int>(noises.size() * methods.size()); }
  int n_trials() const { return n_conditions() * utterances_per_condition; }
  void validate() const;
};

struct Trial {
  int trial_index = 0;
  std::string utterance_id;
  std::string noise_id;
  std::string method;
  std::uint64_t mix_seed = 0;
  std::string stimulus_key;  // cache file stem, filled in when rendered
};

struct SessionPlan {
  std::string session_id;
  std::string participant_id;
  std::string group;
  double snr_db = 0.0;
  std::uint64_t rng_seed = 0;
  std::vector<Trial> trials;
};

std::string condition_id(const std::string& noise_id, const std::string& method);

// Test utterances are shuffled by seed and dealt out so each condition gets
// its own utterances. Conditions are presented in a shuffled order, each as
// a block of its utterances in shuffled order.
SessionPlan plan_session(const eval::Manifest& manifest, const ListenConfig& config,
                         const std::string& participant_id, double snr_db, std::uint64_t seed);

// Renders vocode(enhance(mix)) per trial into `dir`, one WAV per content
// hash of the render inputs. Safe for concurrent use.
class StimulusCache {
 public:
  StimulusCache(std::filesystem::path dir, const eval::Manifest& manifest,
                eval::MethodResources resources, vocoder::EasVocoderConfig vocoder);

  std::string key(const Trial& trial, double snr_db) const;
  // Renders when the file is missing; returns its path.
  std::filesystem::path ensure(const Trial& trial, double snr_db) const;
  std::filesystem::path path_for(const std::string& key) const;
  // Throws InvalidArgument when a method is unknown or lacks its model.
  void check_methods(const std::vector<std::string>& methods) const;

 private:
  std::filesystem::path dir_;
  const eval::Manifest& manifest_;
  eval::MethodResources resources_;
  vocoder::EasVocoderConfig vocoder_;
  std::string fingerprint_;
};

// Renders every trial and records its stimulus key in the plan.
void render_plan(SessionPlan& plan, const StimulusCache& cache);

}  // namespace easlab::listen
