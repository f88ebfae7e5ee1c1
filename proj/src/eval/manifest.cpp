#include "easlab/eval/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "easlab/error.hpp"
#include "json.hpp"

namespace easlab::eval {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::map<std::string, std::string> read_transcripts(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::map<std::string, std::string> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto split = t.find_first_of(" \t");
    if (split == std::string::npos) {
      throw InvalidArgument(path.string() + ":" + std::to_string(number) + ": missing transcript text");
    }
    const std::string id = t.substr(0, split);
    if (!out.emplace(id, trim(std::string_view(t).substr(split))).second) {
      throw InvalidArgument("duplicate transcript for utterance " + id);
    }
  }
  return out;
}

std::vector<fs::path> wav_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

std::string_view to_string(Split split) { return split == Split::Train ? "train" : "test"; }

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "test") return Split::Test;
  throw InvalidArgument("unknown split '" + std::string(text) + "'");
}

void Manifest::validate() const {
  std::unordered_set<std::string> ids;
  std::set<std::string> train_speakers, test_speakers;
  for (const UtteranceEntry& u : utterances) {
    if (u.utterance_id.empty()) throw InvalidArgument("utterance with empty id");
    if (!ids.insert(u.utterance_id).second) {
      throw InvalidArgument("duplicate utterance id " + u.utterance_id);
    }
    (u.split == Split::Train ? train_speakers : test_speakers).insert(u.speaker_id);
  }
  for (const std::string& s : test_speakers) {
    if (train_speakers.count(s)) throw InvalidArgument("speaker " + s + " appears in both splits");
  }
  std::set<std::string> noise_ids;
  for (const NoiseEntry& n : noises) {
    if (n.noise_id.empty()) throw InvalidArgument("noise with empty id");
    // One entry per id, so a noise cannot sit in both splits.
    if (!noise_ids.insert(n.noise_id).second) {
      throw InvalidArgument("noise " + n.noise_id + " listed twice (split overlap or duplicate)");
    }
  }
}

std::vector<const UtteranceEntry*> Manifest::select(Split split) const {
  std::vector<const UtteranceEntry*> out;
  for (const UtteranceEntry& u : utterances) {
    if (u.split == split) out.push_back(&u);
  }
  return out;
}

const NoiseEntry& Manifest::noise(std::string_view noise_id) const {
  for (const NoiseEntry& n : noises) {
    if (n.noise_id == noise_id) return n;
  }
  throw InvalidArgument("noise '" + std::string(noise_id) + "' not in manifest");
}

const UtteranceEntry& Manifest::utterance(std::string_view utterance_id) const {
  for (const UtteranceEntry& u : utterances) {
    if (u.utterance_id == utterance_id) return u;
  }
  throw InvalidArgument("utterance '" + std::string(utterance_id) + "' not in manifest");
}

fs::path Manifest::resolve(const std::string& wav_path) const {
  const fs::path p(wav_path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

std::string to_json(const Manifest& m) {
  json utts = json::array();
  for (const UtteranceEntry& u : m.utterances) {
    utts.push_back({{"utterance_id", u.utterance_id},
                    {"wav_path", u.wav_path},
                    {"speaker_id", u.speaker_id},
                    {"transcript", u.transcript},
                    {"split", to_string(u.split)}});
  }
  json noises = json::array();
  for (const NoiseEntry& n : m.noises) {
    noises.push_back({{"noise_id", n.noise_id}, {"wav_path", n.wav_path}, {"split", to_string(n.split)}});
  }
  const json j = {{"schema_version", kManifestSchemaVersion}, {"utterances", utts}, {"noises", noises}};
  return j.dump(2) + "\n";
}

Manifest parse_manifest(std::string_view json_text, const fs::path& base_dir) {
  Manifest m;
  m.base_dir = base_dir;
  try {
    const json j = json::parse(json_text);
    const int version = j.at("schema_version").get<int>();
    if (version != kManifestSchemaVersion) {
      throw InvalidArgument("unsupported manifest schema version " + std::to_string(version));
    }
    for (const json& u : j.at("utterances")) {
      m.utterances.push_back({u.at("utterance_id").get<std::string>(), u.at("wav_path").get<std::string>(),
                              u.at("speaker_id").get<std::string>(), u.at("transcript").get<std::string>(),
                              parse_split(u.at("split").get<std::string>())});
    }
    for (const json& n : j.value("noises", json::array())) {
      m.noises.push_back({n.at("noise_id").get<std::string>(), n.at("wav_path").get<std::string>(),
                          parse_split(n.at("split").get<std::string>())});
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed manifest: ") + e.what());
  }
  m.validate();
  return m;
}

Manifest load_manifest(const fs::path& path) {
  return parse_manifest(read_text(path), path.parent_path());
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
  manifest.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << to_json(manifest);
  if (!out) throw IoError("failed writing manifest " + path.string());
}

Manifest build_manifest(const fs::path& audio_dir, const fs::path& transcript_file,
                        const SplitRules& rules) {
  if (!fs::is_directory(audio_dir)) throw IoError("audio directory not found: " + audio_dir.string());
  const auto transcripts = read_transcripts(transcript_file);
  const auto files = wav_files(audio_dir);
  if (files.empty()) throw InvalidArgument("no .wav files under " + audio_dir.string());

  Manifest m;
  std::map<std::string, int> per_speaker;
  for (const fs::path& file : files) {
    const fs::path rel = fs::relative(file, audio_dir);
    const std::string id = file.stem().string();
    std::string speaker;
    if (rel.has_parent_path()) {
      speaker = rel.begin()->string();
    } else {
      const auto cut = id.find('_');
      if (cut == std::string::npos || cut == 0) {
        throw InvalidArgument("cannot derive a speaker from " + rel.string());
      }
      speaker = id.substr(0, cut);
    }
    const auto t = transcripts.find(id);
    if (t == transcripts.end()) throw InvalidArgument("no transcript for utterance " + id);
    if (rules.max_utterances_per_speaker > 0 &&
        ++per_speaker[speaker] > rules.max_utterances_per_speaker) {
      continue;
    }
    m.utterances.push_back({id, fs::absolute(file).generic_string(), speaker, t->second,
                            rules.test_speakers.count(speaker) ? Split::Test : Split::Train});
  }
  if (!rules.noise_dir.empty()) {
    for (const fs::path& file : wav_files(rules.noise_dir)) {
      const std::string id = file.stem().string();
      m.noises.push_back({id, fs::absolute(file).generic_string(),
                          rules.test_noises.count(id) ? Split::Test : Split::Train});
    }
  }
  m.base_dir = audio_dir;
  m.validate();
  return m;
}

}  // namespace easlab::eval
