#include "easlab/eval/evaluate.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "easlab/dsp/resample.hpp"
#include "easlab/dsp/signal.hpp"
#include "easlab/dsp/wav.hpp"
#include "easlab/error.hpp"
#include "easlab/hash.hpp"
#include "easlab/stoi/stoi.hpp"

namespace easlab::eval {

std::uint64_t mixture_seed(std::uint64_t seed, const std::string& utterance_id,
                           const std::string& noise_id, double snr_db) {
  char snr[32];
  std::snprintf(snr, sizeof snr, "%.17g", snr_db);
  return seed ^ fnv1a64(utterance_id + '\x1f' + noise_id + '\x1f' + snr);
}

dsp::SampleBuffer make_mixture(const dsp::SampleBuffer& clean, const dsp::SampleBuffer& noise,
                               double snr_db, std::uint64_t seed) {
  if (noise.sample_rate == clean.sample_rate) return dsp::mix_at_snr(clean, noise, snr_db, seed).mixture;
  return dsp::mix_at_snr(clean, dsp::resample(noise, clean.sample_rate), snr_db, seed).mixture;
}

EvalResult evaluate_corpus(const Manifest& manifest, const MethodResources& resources,
                           const EvalConfig& config) {
  if (config.methods.empty()) throw InvalidArgument("no methods to evaluate");
  if (config.noises.empty()) throw InvalidArgument("no noises to evaluate");
  if (config.snrs_db.empty()) throw InvalidArgument("no SNR levels to evaluate");
  std::vector<Method> methods;
  for (const std::string& name : config.methods) {
    for (const Method& m : methods) {
      if (m.name == name) throw InvalidArgument("method '" + name + "' listed twice");
    }
    methods.push_back(make_method(name, resources));
  }

  const auto utts = manifest.select(config.split);
  if (utts.empty()) throw InvalidArgument("manifest has no utterances in the evaluation split");
  std::vector<dsp::SampleBuffer> clean;
  for (const UtteranceEntry* u : utts) clean.push_back(dsp::load_wav(manifest.resolve(u->wav_path)));
  std::vector<dsp::SampleBuffer> noise;
  for (const std::string& id : config.noises) {
    noise.push_back(dsp::load_wav(manifest.resolve(manifest.noise(id).wav_path)));
  }

  // One job per (utterance, noise, snr); each job scores every method.
  const std::size_t n_noise = config.noises.size(), n_snr = config.snrs_db.size();
  const std::size_t n_jobs = utts.size() * n_noise * n_snr;
  const std::size_t n_methods = methods.size();
  std::vector<double> scores(n_jobs * n_methods);

  auto run_job = [&](std::size_t job) {
    const std::size_t s = job % n_snr;
    const std::size_t k = (job / n_snr) % n_noise;
    const std::size_t u = job / (n_snr * n_noise);
    const double snr = config.snrs_db[s];
    const dsp::SampleBuffer mixture = make_mixture(
        clean[u], noise[k], snr, mixture_seed(config.seed, utts[u]->utterance_id, config.noises[k], snr));
    for (std::size_t m = 0; m < n_methods; ++m) {
      scores[job * n_methods + m] = stoi::stoi(clean[u], methods[m].enhance(mixture));
    }
  };

  const int threads = std::max(1, config.threads);
  if (threads == 1) {
    for (std::size_t j = 0; j < n_jobs; ++j) run_job(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t j; (j = next.fetch_add(1)) < n_jobs;) {
          try {
            run_job(j);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n_jobs;
          }
        }
      });
    }
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  // Merge in job order so sums do not depend on scheduling.
  EvalResult result;
  for (std::size_t job = 0; job < n_jobs; ++job) {
    const std::size_t s = job % n_snr;
    const std::size_t k = (job / n_snr) % n_noise;
    const std::size_t u = job / (n_snr * n_noise);
    for (std::size_t m = 0; m < n_methods; ++m) {
      const double v = scores[job * n_methods + m];
      result.items.push_back({utts[u]->utterance_id, config.noises[k], config.snrs_db[s], methods[m].name, v});
      ScoreCell& cell = result.table[{config.noises[k], config.snrs_db[s], methods[m].name}];
      cell.mean_stoi += v;
      ++cell.n;
    }
  }
  for (auto& [key, cell] : result.table) cell.mean_stoi /= cell.n;
  return result;
}

}  // namespace easlab::eval
