// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when
// any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "easlab/dsp/signal.hpp"
#include "easlab/eval/ttest.hpp"
#include "easlab/mmse/mmse.hpp"
#include "easlab/nn/fcn.hpp"
#include "easlab/nn/grad_check.hpp"
#include "easlab/nn/losses.hpp"
#include "easlab/nn/model_io.hpp"
#include "easlab/nn/train.hpp"
#include "easlab/stoi/stoi.hpp"
#include "easlab/vocoder/eas_vocoder.hpp"
#include "fixtures.hpp"
#include "mmse_oracle.hpp"
#include "stoi_oracle.hpp"

using namespace easlab;
using dsp::SampleBuffer;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::vector<double> as_vector(const SampleBuffer& b) { return {b.samples.data(), b.samples.data() + b.size()}; }

SampleBuffer noise_of(int kind, std::uint64_t seed, double seconds) {
  switch (kind % 3) {
    case 0: return testing::white_noise(seed, seconds);
    case 1: return testing::street_noise(seed, seconds);
    default: return testing::engine_noise(seed, seconds);
  }
}

// Same toy set as the unit tests: synthetic speech in white noise at 0 dB.
std::vector<nn::UtterancePair> toy_pairs(int n, double seconds, std::uint64_t seed) {
  std::vector<nn::UtterancePair> data;
  const SampleBuffer noise = testing::white_noise(seed + 1000, seconds * n + 1.0);
  for (int i = 0; i < n; ++i) {
    const SampleBuffer clean = testing::synthetic_speech(seed + i, seconds);
    data.push_back({dsp::mix_at_snr(clean, noise, 0.0, seed + i).mixture, clean, "u" + std::to_string(i)});
  }
  return data;
}

std::vector<double> curve(const nn::TrainResult& r) {
  std::vector<double> c{r.initial_loss};
  c.insert(c.end(), r.epoch_loss.begin(), r.epoch_loss.end());
  return c;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

Verdict stoi_self_identity() {
  double worst = 0.0;
  for (std::uint64_t u = 0; u < 20; ++u) {
    SampleBuffer x = testing::synthetic_speech(u + 1, 0.9 + 0.05 * static_cast<double>(u));
    if (u % 2) x = dsp::mix_at_snr(x, noise_of(static_cast<int>(u), u, 3.0), -5.0 + u, u).mixture;
    const SampleBuffer neg(-x.samples, x.sample_rate);
    worst = std::max({worst, std::abs(stoi::stoi(x, x) - 1.0), std::abs(stoi::stoi(x, neg) - 1.0)});
  }
  return {worst <= 1e-9, fmt("max |stoi - 1| = %.3g", worst)};
}

Verdict stoi_oracle_equivalence() {
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double snr = -10.0 + 30.0 * i / 19.0;
    const SampleBuffer clean = testing::synthetic_speech(40 + i, 1.2);
    const SampleBuffer noisy = dsp::mix_at_snr(clean, noise_of(i, 60 + i, 2.5), snr, i).mixture;
    const double fast = stoi::stoi(clean, noisy);
    const double slow = oracle::brute_force_stoi(as_vector(clean), as_vector(noisy), clean.sample_rate);
    worst = std::max(worst, std::abs(fast - slow));
  }
  return {worst <= 1e-6, fmt("max |main - brute force| = %.3g over 20 fixtures", worst)};
}

Verdict stoi_monotone() {
  const std::vector<double> grid = {-10, -5, 0, 5, 10, 15, 20};
  double worst_step = 1.0;
  for (std::uint64_t u = 0; u < 5; ++u) {
    const SampleBuffer clean = testing::synthetic_speech(300 + u, 1.5);
    const SampleBuffer noise = testing::white_noise(400 + u, 3.0);
    double prev = -2.0;
    for (double snr : grid) {
      const double s = stoi::stoi(clean, dsp::mix_at_snr(clean, noise, snr, u).mixture);
      if (prev > -2.0) worst_step = std::min(worst_step, s - prev);
      prev = s;
    }
  }
  return {worst_step >= -0.01, fmt("smallest step %.4f (slack 0.01)", worst_step)};
}

Verdict loss_fidelity() {
  std::vector<SampleBuffer> est, ref;
  double metric = 0.0;
  for (std::uint64_t u = 0; u < 10; ++u) {
    const SampleBuffer clean = testing::synthetic_speech(500 + u, 1.2);
    est.push_back(dsp::mix_at_snr(clean, noise_of(static_cast<int>(u), 510 + u, 2.0), -5.0 + 2.0 * u, u).mixture);
    ref.push_back(clean);
    metric += stoi::stoi(clean, est.back()) / 10.0;
  }
  const double forward = std::abs(nn::loss_stoi(est, ref).total + metric);

  const SampleBuffer clean = testing::synthetic_speech(12, 0.8);
  const SampleBuffer noisy = dsp::mix_at_snr(clean, testing::white_noise(13, 2.0), 0.0, 1).mixture;
  const std::vector<nn::FcnArchitecture> archs = {
      {2, 4, 9, nn::Activation::Identity}, {3, 6, 9, nn::Activation::Tanh}, nn::FcnArchitecture::desk()};
  double grad = 0.0;
  int probes = 0;
  for (std::size_t a = 0; a < archs.size(); ++a) {
    const nn::FcnModel m = nn::FcnModel::create(archs[a], 20 + a);
    const nn::GradCheckResult r = nn::grad_check_fcn(m, nn::Objective::Stoi, 0.0, noisy, clean, {1e-4, 50});
    grad = std::max(grad, r.max_relative_error);
    probes += r.probes;
  }
  return {forward <= 1e-6 && grad < 1e-4 && probes == 150,
          fmt("forward error %.3g, gradient max rel error %.3g over %g probes", forward, grad, probes)};
}

Verdict mmse_sanity() {
  const double oracle_gap = std::abs(mmse::mmse_gain(1.0, 1.0) - oracle::quadrature_mmse_gain(1.0, 1.0));
  double delta = 0.0;
  for (std::uint64_t u = 0; u < 10; ++u) {
    const SampleBuffer clean = testing::synthetic_speech(100 + u, 1.5);
    const SampleBuffer noisy = dsp::mix_at_snr(clean, testing::white_noise(200 + u, 2.0), 0.0, u).mixture;
    delta += (stoi::stoi(clean, mmse::enhance_mmse(noisy)) - stoi::stoi(clean, noisy)) / 10.0;
  }
  return {oracle_gap <= 1e-6 && delta >= 0.0,
          fmt("gain(1,1) vs quadrature %.3g; mean STOI change at 0 dB white %+.4f", oracle_gap, delta)};
}

Verdict toy_fcn() {
  const auto train = toy_pairs(20, 1.2, 500);
  const auto held = toy_pairs(10, 1.2, 900);
  nn::FcnModel model = nn::FcnModel::create(nn::FcnArchitecture::desk(), 1729);
  nn::TrainConfig cfg;
  cfg.objective = nn::Objective::Stoi;
  cfg.epochs = 10;
  const nn::TrainResult r = nn::train(model, train, cfg);
  double noisy = 0.0, enhanced = 0.0;
  for (const auto& p : held) {
    noisy += stoi::stoi(p.clean, p.noisy) / 10.0;
    enhanced += stoi::stoi(p.clean, nn::fcn_forward(model, p.noisy)) / 10.0;
  }
  return {r.final_loss < r.initial_loss && enhanced >= noisy + 0.01,
          fmt("loss %.4f -> %.4f; held-out STOI noisy %.4f, ", r.initial_loss, r.final_loss, noisy) +
              fmt("FCN %.4f", enhanced)};
}

Verdict combined_reduction() {
  const auto small = toy_pairs(4, 1.2, 700);
  const nn::FcnModel init = nn::FcnModel::create(nn::FcnArchitecture::desk(), 1729);
  nn::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.objective = nn::Objective::Stoi;
  nn::FcnModel s = init;
  const nn::TrainResult rs = nn::train(s, small, cfg);
  cfg.objective = nn::Objective::Combined;
  cfg.alpha = 0.0;
  nn::FcnModel c = init;
  const nn::TrainResult rc = nn::train(c, small, cfg);
  std::vector<SampleBuffer> est, ref;
  for (const auto& p : small) {
    est.push_back(p.noisy);
    ref.push_back(p.clean);
  }
  const bool exact = curve(rs) == curve(rc) && nn::encode_model(s) == nn::encode_model(c) &&
                     nn::loss_combined(est, ref, 0.0).total == nn::loss_stoi(est, ref).total;

  const auto data = toy_pairs(10, 1.2, 500);
  cfg.epochs = 8;
  cfg.objective = nn::Objective::Mse;
  nn::FcnModel m = init;
  const nn::TrainResult rm = nn::train(m, data, cfg);
  cfg.objective = nn::Objective::Combined;
  cfg.alpha = 1e4;
  nn::FcnModel big = init;
  const nn::TrainResult rb = nn::train(big, data, cfg);
  const double r = correlation(curve(rm), curve(rb));
  return {exact && r > 0.99,
          std::string(exact ? "alpha 0 bit-identical to the STOI objective" : "alpha 0 differs from the STOI objective") +
              fmt("; alpha 1e4 vs MSE loss-curve correlation %.6f", r)};
}

Verdict vocoder_checks() {
  const vocoder::EasVocoderConfig cfg;
  double rms_err = 0.0;
  for (std::uint64_t u = 0; u < 20; ++u) {
    SampleBuffer y = testing::synthetic_speech(30 + u, 0.8 + 0.05 * static_cast<double>(u));
    if (u % 2) y = dsp::mix_at_snr(y, noise_of(static_cast<int>(u), u, 3.0), -3.0, u).mixture;
    const auto z = vocoder::vocode_eas(y, cfg, "u" + std::to_string(u));
    rms_err = std::max(rms_err, std::abs(dsp::rms(z.output) / dsp::rms(y) - 1.0));
  }
  double separation = 1e9;
  for (int n = 0; n < cfg.n_channels(); ++n) {
    const auto [lo, hi] = cfg.band_edges_hz[static_cast<std::size_t>(n)];
    const auto env = vocoder::channel_envelopes(testing::tone(std::sqrt(lo * hi), 0.3, 1.0), cfg);
    const Eigen::VectorXd mean = env.rightCols(env.cols() - 4000).rowwise().mean();
    for (int m = 0; m < cfg.n_channels(); ++m) {
      if (m != n) separation = std::min(separation, 20.0 * std::log10(mean[n] / mean[m]));
    }
  }
  const SampleBuffer tone = testing::tone(2000.0, 0.5, 1.0);
  const Eigen::Index skip = 4000;
  const double through = dsp::rms(vocoder::acoustic_path(tone, cfg).samples.tail(tone.size() - skip));
  const double attenuation = -20.0 * std::log10(through / dsp::rms(tone.samples.tail(tone.size() - skip)));
  return {rms_err <= 1e-6 && separation >= 20.0 && attenuation >= 70.0,
          fmt("RMS rel error %.3g; worst separation %.1f dB; 2 kHz acoustic attenuation %.1f dB", rms_err, separation,
              attenuation)};
}

Verdict ttest_oracle() {
  std::ifstream in(fs::path(EASLAB_TEST_DATA) / "ttest_oracle.json");
  if (!in) return {false, "oracle file missing"};
  const auto fixtures = nlohmann::json::parse(in).at("fixtures");
  double worst = 0.0;
  for (const auto& f : fixtures) {
    const auto r = eval::paired_t_test_one_tailed(f.at("a").get<std::vector<double>>(), f.at("b").get<std::vector<double>>());
    worst = std::max(worst, std::abs(r.p_value - f.at("p").get<double>()));
  }
  const double p = eval::paired_t_test_one_tailed({0, 0, 0, 0, 0}, {1, 2, 3, 4, 5}).p_value;
  return {fixtures.size() >= 50 && worst <= 1e-9 && std::abs(p - 0.00661) <= 1e-5,
          fmt("max |p - oracle| %.3g over %g fixtures; d=1..5 gives p = %.6f", worst,
              static_cast<double>(fixtures.size()), p)};
}

int run_cli(const std::vector<std::string>& args) {
  std::string cmd = std::string("'") + EASLAB_CLI_PATH + "'";
  for (const auto& a : args) cmd += " '" + a + "'";
  cmd += " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict cli_determinism() {
  testing::TempDir dir;
  testing::CorpusSpec spec;
  spec.train_speakers = 1;
  spec.test_speakers = 1;
  spec.utterances_per_speaker = 2;
  spec.seconds = 1.0;
  spec.noise_seconds = 2.0;
  const std::string manifest = testing::write_corpus(dir.path(), spec).string();
  const std::string clean = (dir / "audio" / "spk0_000.wav").string();
  const std::string noise = (dir / "noise" / "street.wav").string();
  auto d = [&](const std::string& name) { return (dir / name).string(); };

  struct Stage {
    std::string name;
    std::vector<std::string> args;
    std::string output;
  };
  const std::vector<Stage> stages = {
      {"mix", {"mix", "--snr", "-3", "--seed", "7", clean, noise, d("mix.wav")}, d("mix.wav")},
      {"vocode", {"vocode", "--float", clean, d("voc.wav")}, d("voc.wav")},
      {"train", {"train", "--manifest", manifest, "--epochs", "2", "--out", d("fcn.easm")}, d("fcn.easm")},
      {"evaluate",
       {"evaluate", "--manifest", manifest, "--methods", "noisy,mmse", "--snrs", "-3,1", "--threads", "2", "--out",
        d("table.json")},
       d("table.json")},
  };
  std::string detail;
  bool ok = true;
  for (const Stage& s : stages) {
    std::string runs[2];
    for (std::string& bytes : runs) {
      if (run_cli(s.args) != 0) {
        ok = false;
        detail += s.name + " failed; ";
        break;
      }
      bytes = testing::read_bytes(s.output);
    }
    const bool same = !runs[0].empty() && runs[0] == runs[1];
    ok = ok && same;
    detail += s.name + (same ? " identical" : " DIFFERS") + (&s == &stages.back() ? "" : ", ");
  }
  return {ok, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"STOI self-identity", stoi_self_identity},
      {"STOI oracle equivalence", stoi_oracle_equivalence},
      {"STOI monotone in SNR", stoi_monotone},
      {"Differentiable loss fidelity", loss_fidelity},
      {"MMSE sanity", mmse_sanity},
      {"Toy FCN(S) training", toy_fcn},
      {"Combined objective reduction", combined_reduction},
      {"Vocoder invariants", vocoder_checks},
      {"t-test oracle", ttest_oracle},
      {"CLI determinism", cli_determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
