#include "fixtures.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "easlab/dsp/filter.hpp"
#include "easlab/dsp/signal.hpp"
#include "easlab/dsp/wav.hpp"
#include "easlab/eval/manifest.hpp"

namespace easlab::testing {
namespace {

namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

Eigen::Index samples_for(double seconds, int fs) {
  return static_cast<Eigen::Index>(std::llround(seconds * fs));
}

// Gain of a two-pole resonance at frequency f.
double formant_gain(double f, double centre, double bandwidth) {
  const double x = (f - centre) / (0.5 * bandwidth);
  return 1.0 / std::sqrt(1.0 + x * x);
}

}  // namespace

dsp::SampleBuffer synthetic_speech(std::uint64_t seed, double seconds, int fs, double lead_silence_s) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  const Eigen::Index n = samples_for(seconds, fs);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);

  const double f0_base = 100.0 + 110.0 * u(rng);
  Eigen::Index pos = samples_for(lead_silence_s, fs);
  while (pos < n) {
    const auto len = samples_for(0.15 + 0.15 * u(rng), fs);
    const double f0 = f0_base * (0.85 + 0.3 * u(rng));
    const double glide = (u(rng) - 0.5) * 0.3;
    const double f1 = 300 + 500 * u(rng), f2 = 900 + 1400 * u(rng), f3 = 2200 + 1000 * u(rng);
    const double level = 0.5 + 0.5 * u(rng);
    double phase = 0.0;
    for (Eigen::Index i = 0; i < len && pos + i < n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(len);
      const double f = f0 * (1.0 + glide * t);
      phase += 2.0 * kPi * f / fs;
      const double contour = 0.5 - 0.5 * std::cos(2.0 * kPi * t);
      double s = 0.0;
      for (int h = 1; h * f < 4000.0; ++h) {
        const double fh = h * f;
        const double a = formant_gain(fh, f1, 120) + 0.6 * formant_gain(fh, f2, 180) +
                         0.3 * formant_gain(fh, f3, 250);
        s += a / h * std::sin(h * phase);
      }
      x[pos + i] += level * contour * s;
    }
    pos += len;
    if (u(rng) < 0.35 && pos < n) {
      // Fricative: high-passed noise burst.
      const auto flen = samples_for(0.06 + 0.05 * u(rng), fs);
      double prev = 0.0;
      for (Eigen::Index i = 0; i < flen && pos + i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(flen);
        const double w = g(rng);
        x[pos + i] += 0.4 * (0.5 - 0.5 * std::cos(2.0 * kPi * t)) * (w - 0.95 * prev);
        prev = w;
      }
      pos += flen;
    }
    pos += samples_for(0.04 + 0.12 * u(rng), fs);
  }
  const double r = dsp::rms(x);
  if (r > 0) x *= 0.05 / r;
  return {std::move(x), fs};
}

dsp::SampleBuffer white_noise(std::uint64_t seed, double seconds, int fs) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.05);
  Eigen::VectorXd x(samples_for(seconds, fs));
  for (double& v : x) v = g(rng);
  return {std::move(x), fs};
}

dsp::SampleBuffer engine_noise(std::uint64_t seed, double seconds, int fs) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  const Eigen::Index n = samples_for(seconds, fs);
  Eigen::VectorXd rumble(n);
  for (double& v : rumble) v = g(rng);
  rumble = dsp::apply_filter(dsp::design_butterworth(dsp::FilterKind::Lowpass, 4, 600.0, fs), rumble);
  const double fund = 28.0 + 6.0 * std::uniform_real_distribution<double>(0, 1)(rng);
  std::vector<double> phases(12);
  for (double& p : phases) p = u(rng);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    double h = 0.0;
    for (int k = 1; k <= 12; ++k) h += std::sin(2.0 * kPi * fund * k * t + phases[static_cast<std::size_t>(k - 1)]) / k;
    x[i] = (1.0 + 0.3 * std::sin(2.0 * kPi * 1.7 * t)) * (0.6 * h + 2.0 * rumble[i]);
  }
  x *= 0.05 / dsp::rms(x);
  return {std::move(x), fs};
}

dsp::SampleBuffer street_noise(std::uint64_t seed, double seconds, int fs) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Index n = samples_for(seconds, fs);
  // Paul Kellet's pink filter approximation.
  double b0 = 0, b1 = 0, b2 = 0;
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = g(rng);
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    x[i] = b0 + b1 + b2 + w * 0.1848;
  }
  for (Eigen::Index pos = 0; pos < n;) {
    pos += static_cast<Eigen::Index>((0.2 + 0.6 * u(rng)) * fs);
    const auto len = static_cast<Eigen::Index>((0.05 + 0.2 * u(rng)) * fs);
    const double gain = 1.0 + 2.0 * u(rng);
    for (Eigen::Index i = 0; i < len && pos + i < n; ++i) {
      x[pos + i] *= 1.0 + gain * std::sin(kPi * static_cast<double>(i) / static_cast<double>(len));
    }
  }
  x *= 0.05 / dsp::rms(x);
  return {std::move(x), fs};
}

dsp::SampleBuffer tone(double freq_hz, double amplitude, double seconds, int fs) {
  Eigen::VectorXd x(samples_for(seconds, fs));
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = amplitude * std::sin(2.0 * kPi * freq_hz * i / fs);
  return {std::move(x), fs};
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("easlab-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path write_corpus(const fs::path& root, const CorpusSpec& spec) {
  const fs::path audio = root / "audio";
  const fs::path noise_dir = root / "noise";
  fs::create_directories(audio);
  fs::create_directories(noise_dir);
  static const char* const kChars[] = {"我", "們", "今", "天", "去", "公", "園", "散", "步", "吃",
                                       "飯", "看", "書", "學", "生", "老", "師", "早", "上", "好",
                                       "山", "水", "花", "鳥", "風", "雨", "車", "站", "門", "口"};
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> pick(0, 29);
  std::ostringstream transcripts;
  eval::SplitRules rules;
  const int speakers = spec.train_speakers + spec.test_speakers;
  for (int s = 0; s < speakers; ++s) {
    const std::string spk = "spk" + std::to_string(s);
    if (s >= spec.train_speakers) rules.test_speakers.insert(spk);
    for (int k = 0; k < spec.utterances_per_speaker; ++k) {
      char id[32];
      std::snprintf(id, sizeof id, "%s_%03d", spk.c_str(), k);
      const std::uint64_t seed = spec.seed * 1000003ULL + static_cast<std::uint64_t>(s * 1000 + k);
      dsp::save_wav(synthetic_speech(seed, spec.seconds), audio / (std::string(id) + ".wav"),
                    {dsp::WavEncoding::Float32, true});
      transcripts << id << ' ';
      for (int c = 0; c < spec.transcript_chars; ++c) transcripts << kChars[pick(rng)];
      transcripts << '\n';
    }
  }
  std::uint64_t nseed = spec.seed + 17;
  auto noise = [&](const std::string& id) {
    if (id == "engine") return engine_noise(nseed++, spec.noise_seconds);
    if (id == "street") return street_noise(nseed++, spec.noise_seconds);
    return white_noise(nseed++, spec.noise_seconds);
  };
  for (const std::string& id : spec.train_noises) {
    dsp::save_wav(noise(id), noise_dir / (id + ".wav"), {dsp::WavEncoding::Float32, true});
  }
  for (const std::string& id : spec.test_noises) {
    dsp::save_wav(noise(id), noise_dir / (id + ".wav"), {dsp::WavEncoding::Float32, true});
    rules.test_noises.insert(id);
  }
  {
    std::ofstream t(root / "transcripts.txt", std::ios::binary);
    t << transcripts.str();
  }
  rules.noise_dir = noise_dir;
  const eval::Manifest m = eval::build_manifest(audio, root / "transcripts.txt", rules);
  const fs::path path = root / "manifest.json";
  eval::save_manifest(m, path);
  return path;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace easlab::testing
