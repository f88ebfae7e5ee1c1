#include "easlab/eval/training_set.hpp"

#include "easlab/dsp/wav.hpp"
#include "easlab/error.hpp"
#include "easlab/eval/evaluate.hpp"

namespace easlab::eval {

std::vector<nn::UtterancePair> training_pairs(const Manifest& manifest, const TrainingSetSpec& spec) {
  if (spec.snrs_db.empty()) throw InvalidArgument("training set needs at least one SNR");
  std::vector<const NoiseEntry*> noises;
  if (spec.noises.empty()) {
    for (const NoiseEntry& n : manifest.noises) {
      if (n.split == Split::Train) noises.push_back(&n);
    }
  } else {
    for (const std::string& id : spec.noises) {
      const NoiseEntry& n = manifest.noise(id);
      if (n.split != Split::Train) throw InvalidArgument("noise " + id + " is reserved for testing");
      noises.push_back(&n);
    }
  }
  if (noises.empty()) throw InvalidArgument("manifest has no training noise");

  auto utts = manifest.select(Split::Train);
  if (spec.max_utterances > 0 && utts.size() > static_cast<std::size_t>(spec.max_utterances)) {
    utts.resize(static_cast<std::size_t>(spec.max_utterances));
  }
  if (utts.empty()) throw InvalidArgument("manifest has no training utterances");

  std::vector<dsp::SampleBuffer> noise_audio;
  for (const NoiseEntry* n : noises) noise_audio.push_back(dsp::load_wav(manifest.resolve(n->wav_path)));

  std::vector<nn::UtterancePair> pairs;
  for (const UtteranceEntry* u : utts) {
    const dsp::SampleBuffer clean = dsp::load_wav(manifest.resolve(u->wav_path));
    for (std::size_t k = 0; k < noises.size(); ++k) {
      for (double snr : spec.snrs_db) {
        const std::uint64_t seed = mixture_seed(spec.seed, u->utterance_id, noises[k]->noise_id, snr);
        pairs.push_back({make_mixture(clean, noise_audio[k], snr, seed), clean, u->utterance_id});
      }
    }
  }
  return pairs;
}

}  // namespace easlab::eval
