#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "easlab/dsp/sample_buffer.hpp"

namespace easlab::testing {

// Speech-like test signal: a short lead-in of silence, then voiced
// syllables (harmonic source shaped by three formants, raised-cosine
// amplitude contour) separated by pauses, with occasional fricative bursts.
dsp::SampleBuffer synthetic_speech(std::uint64_t seed, double seconds, int sample_rate = 16000,
                                   double lead_silence_s = 0.25);

dsp::SampleBuffer white_noise(std::uint64_t seed, double seconds, int sample_rate = 16000);
// Low-frequency harmonic rumble with slow amplitude wobble.
dsp::SampleBuffer engine_noise(std::uint64_t seed, double seconds, int sample_rate = 16000);
// Pink-ish broadband noise with intermittent louder events.
dsp::SampleBuffer street_noise(std::uint64_t seed, double seconds, int sample_rate = 16000);

dsp::SampleBuffer tone(double freq_hz, double amplitude, double seconds, int sample_rate = 16000);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct CorpusSpec {
  int train_speakers = 2;
  int test_speakers = 1;
  int utterances_per_speaker = 4;
  double seconds = 1.2;
  int transcript_chars = 10;
  std::vector<std::string> train_noises = {"white"};
  std::vector<std::string> test_noises = {"engine", "street"};
  double noise_seconds = 4.0;
  std::uint64_t seed = 99;
};

// Writes wav files, transcripts and a manifest.json under `root`; returns the
// manifest path. Speakers are spk0..; test speakers come last.
std::filesystem::path write_corpus(const std::filesystem::path& root, const CorpusSpec& spec);

std::string read_bytes(const std::filesystem::path& path);

}  // namespace easlab::testing
