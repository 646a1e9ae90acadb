#include "isl/data/synth.hpp"

#include "isl/data/record_io.hpp"
#include "isl/error.hpp"
#include "isl/util/digest.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace isl::data {

std::string_view to_string(SynthClass c) {
  switch (c) {
    case SynthClass::sinus: return "sinus";
    case SynthClass::tachycardia: return "tachycardia";
    case SynthClass::irregular_rr: return "irregular_rr";
    case SynthClass::premature_beat: return "premature_beat";
  }
  return "sinus";
}

SynthClass parse_synth_class(std::string_view name) {
  for (auto c : {SynthClass::sinus, SynthClass::tachycardia, SynthClass::irregular_rr, SynthClass::premature_beat}) {
    if (to_string(c) == name) return c;
  }
  throw Error("invalid_argument", "unknown synthetic class '" + std::string(name) + "'");
}

int frame_of_time(double t_seconds, int sampling_rate_hz, int length, int n_frames) {
  const int frame_len = length / n_frames;
  const auto sample = static_cast<int>(std::floor(t_seconds * sampling_rate_hz));
  return std::clamp(sample / frame_len, 0, n_frames - 1);
}

namespace {

// Gaussian bump: amplitude (mV), offset from the beat centre (s), width sigma (s).
struct Wave {
  double amplitude;
  double offset;
  double sigma;
};

// P, Q, R, S, T.
constexpr Wave kSinusBeat[] = {
    {0.15, -0.200, 0.025}, {-0.10, -0.035, 0.010}, {1.00, 0.000, 0.012}, {-0.25, 0.035, 0.010}, {0.30, 0.250, 0.045},
};
// Wide, mostly monophasic ventricular complex with a small discordant T.
constexpr Wave kEctopicBeat[] = {
    {-0.30, -0.060, 0.030}, {2.50, 0.000, 0.100}, {-0.30, 0.300, 0.070},
};

struct Morphology {
  std::vector<Wave> normal;
  std::vector<Wave> ectopic;
};

Morphology draw_morphology(double jitter, std::mt19937_64& rng) {
  Morphology m{{std::begin(kSinusBeat), std::end(kSinusBeat)}, {std::begin(kEctopicBeat), std::end(kEctopicBeat)}};
  if (jitter <= 0) return m;
  std::uniform_real_distribution<double> u(1.0 - jitter, 1.0 + jitter);
  for (auto& w : m.normal) {
    w.amplitude *= u(rng);
    w.sigma *= u(rng);
  }
  for (auto& w : m.ectopic) w.amplitude *= u(rng);
  return m;
}

void add_beat(std::vector<double>& wave, const std::vector<Wave>& shape, double centre, int fs, bool skip_p) {
  const auto n = static_cast<int>(wave.size());
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (skip_p && k == 0) continue;
    const Wave& w = shape[k];
    const double mu = centre + w.offset;
    const int lo = std::max(0, static_cast<int>(std::floor((mu - 5 * w.sigma) * fs)));
    const int hi = std::min(n - 1, static_cast<int>(std::ceil((mu + 5 * w.sigma) * fs)));
    for (int i = lo; i <= hi; ++i) {
      const double d = (static_cast<double>(i) / fs - mu) / w.sigma;
      wave[i] += w.amplitude * std::exp(-0.5 * d * d);
    }
  }
}

struct RhythmSpec {
  double rate_lo;
  double rate_hi;
  double rr_jitter;  // per-beat relative interval jitter, uniform +-
};

RhythmSpec rhythm_for(SynthClass c) {
  switch (c) {
    case SynthClass::sinus: return {60, 80, 0.02};
    case SynthClass::tachycardia: return {120, 160, 0.02};
    case SynthClass::irregular_rr: return {70, 110, 0.35};
    case SynthClass::premature_beat: return {60, 80, 0.02};
  }
  return {60, 80, 0.02};
}

}  // namespace

SynthCorpus synth_generate(const SynthConfig& config) {
  if (config.subjects_per_class < 1 || config.channels < 1 || config.length < 1 || config.sampling_rate_hz < 1 ||
      config.classes.empty() || config.noise_std < 0 || config.n_frames < 1) {
    throw Error("invalid_config", "synth_generate: invalid configuration");
  }
  SynthCorpus corpus;
  for (auto c : config.classes) corpus.manifest.class_vocabulary.emplace_back(to_string(c));

  const int fs = config.sampling_rate_hz;
  const double duration = static_cast<double>(config.length) / fs;
  int serial = 0;
  for (int s = 0; s < config.subjects_per_class; ++s) {
    for (std::size_t ci = 0; ci < config.classes.size(); ++ci) {
      const SynthClass cls = config.classes[ci];
      std::mt19937_64 rng(util::mix_seed(config.seed, static_cast<std::uint64_t>(serial)));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const RhythmSpec rhythm = rhythm_for(cls);

      SynthTruth truth;
      truth.label = cls;
      truth.rate_bpm = rhythm.rate_lo + (rhythm.rate_hi - rhythm.rate_lo) * unit(rng);
      truth.mean_rr_seconds = 60.0 / truth.rate_bpm;
      const Morphology morph = draw_morphology(config.morphology_jitter, rng);

      // Beat train covering the whole record, starting before t=0.
      const double rr = truth.mean_rr_seconds;
      double t = -rr * unit(rng);
      while (t < duration + rr) {
        truth.beat_times.push_back(t);
        t += rr * (1.0 + rhythm.rr_jitter * (2.0 * unit(rng) - 1.0));
      }

      std::vector<bool> ectopic(truth.beat_times.size(), false);
      if (cls == SynthClass::premature_beat) {
        std::vector<std::size_t> candidates;
        for (std::size_t k = 0; k < truth.beat_times.size(); ++k) {
          const double shifted = truth.beat_times[k] - 0.3 * rr;
          if (shifted > 0.5 && shifted < duration - 0.5) candidates.push_back(k);
        }
        std::shuffle(candidates.begin(), candidates.end(), rng);
        const auto wanted = static_cast<std::size_t>(1 + std::uniform_int_distribution<int>(0, 2)(rng));
        for (std::size_t k = 0; k < std::min(wanted, candidates.size()); ++k) ectopic[candidates[k]] = true;
      }

      std::vector<double> wave(static_cast<std::size_t>(config.length), 0.0);
      for (std::size_t k = 0; k < truth.beat_times.size(); ++k) {
        if (ectopic[k]) {
          // Premature: fires early, the following beat keeps its slot (compensatory pause).
          const double centre = truth.beat_times[k] - 0.3 * rr;
          truth.beat_times[k] = centre;
          truth.ectopic_times.push_back(centre);
          add_beat(wave, morph.ectopic, centre, fs, false);
        } else {
          add_beat(wave, morph.normal, truth.beat_times[k], fs, cls == SynthClass::irregular_rr);
        }
      }
      if (cls == SynthClass::irregular_rr) {
        // Fibrillatory baseline in place of organised P waves.
        const double f = 5.0 + 2.0 * unit(rng);
        const double phase = 2.0 * M_PI * unit(rng);
        for (std::size_t i = 0; i < wave.size(); ++i) {
          wave[i] += 0.04 * std::sin(2.0 * M_PI * f * static_cast<double>(i) / fs + phase);
        }
      }
      for (double et : truth.ectopic_times) {
        const int frame = frame_of_time(et, fs, config.length, config.n_frames);
        if (std::find(truth.ectopic_frames.begin(), truth.ectopic_frames.end(), frame) == truth.ectopic_frames.end()) {
          truth.ectopic_frames.push_back(frame);
        }
      }
      std::sort(truth.ectopic_frames.begin(), truth.ectopic_frames.end());

      const double log_spread = std::log(std::max(1.0, config.gain_spread));
      const double subject_gain = std::exp(log_spread * (2.0 * unit(rng) - 1.0));
      truth.channel_gains.resize(static_cast<std::size_t>(config.channels));
      for (auto& g : truth.channel_gains) {
        g = subject_gain * (0.5 + unit(rng));
        if (unit(rng) < config.polarity_flip_prob) g = -g;
      }

      SignalRecord rec;
      char id[32];
      std::snprintf(id, sizeof(id), "R%05d", serial);
      rec.id = id;
      std::snprintf(id, sizeof(id), "S%05d", serial);
      rec.subject_id = id;
      rec.sampling_rate_hz = fs;
      rec.samples.resize(config.channels, config.length);
      std::normal_distribution<double> noise(0.0, config.noise_std);
      for (int h = 0; h < config.channels; ++h) {
        for (int i = 0; i < config.length; ++i) {
          const double n = config.noise_std > 0 ? noise(rng) : 0.0;
          rec.samples(h, i) = truth.channel_gains[static_cast<std::size_t>(h)] * wave[static_cast<std::size_t>(i)] + n;
        }
      }
      quantize_to_float(rec.samples);
      std::vector<std::uint8_t> hot(config.classes.size(), 0);
      hot[ci] = 1;
      rec.labels = hot;

      ManifestEntry entry;
      entry.record_id = rec.id;
      entry.subject_id = rec.subject_id;
      entry.relative_path = "records/" + rec.id + ".bin";
      entry.label_names = {std::string(to_string(cls))};
      entry.sampling_rate_hz = fs;
      entry.channels = config.channels;
      entry.length = config.length;

      corpus.manifest.entries.push_back(std::move(entry));
      corpus.records.push_back(std::move(rec));
      corpus.truth.push_back(std::move(truth));
      ++serial;
    }
  }
  return corpus;
}

DatasetManifest write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  DatasetManifest manifest = corpus.manifest;
  manifest.root = dir;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    store_record(manifest.record_path(manifest.entries[i]), corpus.records[i].samples);
  }
  save_manifest(manifest, dir / "manifest.json");

  nlohmann::json truth = nlohmann::json::array();
  for (std::size_t i = 0; i < corpus.truth.size(); ++i) {
    const auto& t = corpus.truth[i];
    truth.push_back({{"id", corpus.records[i].id},
                     {"class", std::string(to_string(t.label))},
                     {"rate_bpm", t.rate_bpm},
                     {"mean_rr_s", t.mean_rr_seconds},
                     {"ectopic_times_s", t.ectopic_times},
                     {"ectopic_frames", t.ectopic_frames}});
  }
  std::ofstream out(dir / "synth_truth.json", std::ios::trunc);
  if (!out) throw Error("io", "cannot write synth_truth.json");
  out << truth.dump(2) << '\n';
  return manifest;
}

}  // namespace isl::data
