#include "easlab/listen/session.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>

#include "easlab/dsp/wav.hpp"
#include "easlab/error.hpp"
#include "easlab/eval/evaluate.hpp"
#include "easlab/hash.hpp"
#include "easlab/nn/model_io.hpp"

namespace easlab::listen {
namespace {

namespace fs = std::filesystem;

template <typename T>
void fisher_yates(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void ListenConfig::validate() const {
  if (noises.empty() || methods.empty()) throw InvalidArgument("listening test needs noises and methods");
  if (std::set(noises.begin(), noises.end()).size() != noises.size() ||
      std::set(methods.begin(), methods.end()).size() != methods.size()) {
    throw InvalidArgument("duplicate noise or method in listening config");
  }
  if (utterances_per_condition < 1) throw InvalidArgument("utterances per condition must be >= 1");
  if (max_plays < 1) throw InvalidArgument("max plays must be >= 1");
  if (allowed_snrs_db.empty()) throw InvalidArgument("no SNR levels allowed");
}

std::string condition_id(const std::string& noise_id, const std::string& method) {
  return noise_id + "/" + method;
}

SessionPlan plan_session(const eval::Manifest& manifest, const ListenConfig& config,
                         const std::string& participant_id, double snr_db, std::uint64_t seed) {
  config.validate();
  if (participant_id.empty()) throw InvalidArgument("participant id is empty");
  if (std::find(config.allowed_snrs_db.begin(), config.allowed_snrs_db.end(), snr_db) ==
      config.allowed_snrs_db.end()) {
    throw InvalidArgument("SNR not allowed for listening sessions");
  }
  for (const std::string& n : config.noises) manifest.noise(n);

  std::vector<std::string> pool;
  for (const eval::UtteranceEntry* u : manifest.select(eval::Split::Test)) {
    if (!u->transcript.empty()) pool.push_back(u->utterance_id);
  }
  std::sort(pool.begin(), pool.end());
  const auto needed = static_cast<std::size_t>(config.n_trials());
  if (pool.size() < needed) {
    throw InvalidArgument("listening session needs " + std::to_string(needed) +
                          " test utterances, manifest has " + std::to_string(pool.size()));
  }

  std::mt19937_64 rng(seed);
  fisher_yates(pool, rng);
  std::vector<std::pair<std::string, std::string>> conditions;
  for (const std::string& n : config.noises) {
    for (const std::string& m : config.methods) conditions.emplace_back(n, m);
  }
  std::vector<std::size_t> order(conditions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  fisher_yates(order, rng);

  SessionPlan plan;
  plan.participant_id = participant_id;
  plan.snr_db = snr_db;
  plan.rng_seed = seed;
  const auto per = static_cast<std::size_t>(config.utterances_per_condition);
  for (std::size_t c : order) {
    // Condition c owns pool[c*per, (c+1)*per).
    std::vector<std::string> utts(pool.begin() + static_cast<std::ptrdiff_t>(c * per),
                                  pool.begin() + static_cast<std::ptrdiff_t>((c + 1) * per));
    fisher_yates(utts, rng);
    for (const std::string& u : utts) {
      Trial t;
      t.trial_index = static_cast<int>(plan.trials.size());
      t.utterance_id = u;
      t.noise_id = conditions[c].first;
      t.method = conditions[c].second;
      t.mix_seed = eval::mixture_seed(seed, u, t.noise_id, snr_db);
      plan.trials.push_back(std::move(t));
    }
  }
  return plan;
}

StimulusCache::StimulusCache(fs::path dir, const eval::Manifest& manifest,
                             eval::MethodResources resources, vocoder::EasVocoderConfig vocoder)
    : dir_(std::move(dir)), manifest_(manifest), resources_(std::move(resources)), vocoder_(std::move(vocoder)) {
  fs::create_directories(dir_);
  std::uint64_t h = fnv1a64(vocoder::to_json(vocoder_));
  if (resources_.fcn) h = fnv1a64(nn::encode_model(*resources_.fcn), h);
  if (resources_.ddae) h = fnv1a64(nn::encode_model(*resources_.ddae), h);
  char mmse[128];
  std::snprintf(mmse, sizeof mmse, "%d|%d|%d|%.17g|%.17g|%d|%.17g", resources_.mmse.frame_len,
                resources_.mmse.hop, static_cast<int>(resources_.mmse.window), resources_.mmse.dd_alpha, resources_.mmse.xi_min_db,
                resources_.mmse.noise_init_frames, resources_.mmse.gain_floor);
  fingerprint_ = hex64(fnv1a64(mmse, h));
}

std::string StimulusCache::key(const Trial& t, double snr_db) const {
  char snr[32];
  std::snprintf(snr, sizeof snr, "%.17g", snr_db);
  const std::string inputs = t.utterance_id + '\x1f' + t.noise_id + '\x1f' + t.method + '\x1f' + snr +
                             '\x1f' + std::to_string(t.mix_seed) + '\x1f' + fingerprint_;
  return hex64(fnv1a64(inputs));
}

void StimulusCache::check_methods(const std::vector<std::string>& methods) const {
  for (const std::string& m : methods) eval::make_method(m, resources_);
}

fs::path StimulusCache::path_for(const std::string& key) const { return dir_ / (key + ".wav"); }

fs::path StimulusCache::ensure(const Trial& t, double snr_db) const {
  const fs::path out = path_for(key(t, snr_db));
  if (fs::exists(out)) return out;
  const eval::UtteranceEntry& u = manifest_.utterance(t.utterance_id);
  const dsp::SampleBuffer clean = dsp::load_wav(manifest_.resolve(u.wav_path));
  const dsp::SampleBuffer noise = dsp::load_wav(manifest_.resolve(manifest_.noise(t.noise_id).wav_path));
  const dsp::SampleBuffer mixture = eval::make_mixture(clean, noise, snr_db, t.mix_seed);
  const dsp::SampleBuffer enhanced = eval::make_method(t.method, resources_).enhance(mixture);
  const vocoder::VocodeResult z = vocoder::vocode_eas(enhanced, vocoder_, t.utterance_id);
  // Unique temp name, then rename, so concurrent renders never expose a partial file.
  std::random_device rd;
  const fs::path tmp = dir_ / (out.stem().string() + "." + hex64((std::uint64_t{rd()} << 32) | rd()) + ".tmp");
  dsp::save_wav(z.output, tmp);
  fs::rename(tmp, out);
  return out;
}

void render_plan(SessionPlan& plan, const StimulusCache& cache) {
  for (Trial& t : plan.trials) t.stimulus_key = cache.ensure(t, plan.snr_db).stem().string();
}

}  // namespace easlab::listen
