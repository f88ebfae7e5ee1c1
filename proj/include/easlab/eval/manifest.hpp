#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace easlab::eval {

enum class Split { Train, Test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct UtteranceEntry {
  std::string utterance_id;
  std::string wav_path;
  std::string speaker_id;
  std::string transcript;  // UTF-8
  Split split = Split::Train;
};

struct NoiseEntry {
  std::string noise_id;
  std::string wav_path;
  Split split = Split::Train;
};

// Relative wav paths resolve against `base_dir` (the manifest's directory
// once loaded from disk).
struct Manifest {
  std::vector<UtteranceEntry> utterances;
  std::vector<NoiseEntry> noises;
  std::filesystem::path base_dir;

  // Unique ids; train and test share no speaker and no noise.
  void validate() const;

  std::vector<const UtteranceEntry*> select(Split split) const;
  const NoiseEntry& noise(std::string_view noise_id) const;
  const UtteranceEntry& utterance(std::string_view utterance_id) const;
  std::filesystem::path resolve(const std::string& wav_path) const;
};

inline constexpr int kManifestSchemaVersion = 1;

std::string to_json(const Manifest& manifest);
Manifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir = {});
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

struct SplitRules {
  std::set<std::string> test_speakers;
  // Keep at most this many utterances per speaker, in id order (0 = all).
  int max_utterances_per_speaker = 0;
  // Optional directory of noise recordings, one noise per wav file.
  std::filesystem::path noise_dir;
  std::set<std::string> test_noises;
};

// Scans audio_dir for .wav files. A file inside a subdirectory takes the
// subdirectory name as its speaker; a top-level file "spk_xxx.wav" takes the
// text before the first underscore. The transcript file holds one
// "<utterance_id> <transcript>" line per utterance.
Manifest build_manifest(const std::filesystem::path& audio_dir,
                        const std::filesystem::path& transcript_file, const SplitRules& rules);

}  // namespace easlab::eval
