#pragma once

#include "isl/data/manifest.hpp"
#include "isl/data/signal.hpp"

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace isl::data {

enum class SynthClass { sinus, tachycardia, irregular_rr, premature_beat };

std::string_view to_string(SynthClass c);
SynthClass parse_synth_class(std::string_view name);

struct SynthConfig {
  int subjects_per_class = 50;
  std::vector<SynthClass> classes = {SynthClass::sinus, SynthClass::tachycardia, SynthClass::irregular_rr,
                                     SynthClass::premature_beat};
  int channels = 12;
  int length = 5000;
  int sampling_rate_hz = 500;
  double noise_std = 0.01;  // mV
  /// Frame count used only to report which frames hold ectopic beats.
  int n_frames = 10;
  /// Per-subject nuisance: overall gain drawn log-uniformly in
  /// [1/gain_spread, gain_spread], and a lead polarity flip probability.
  double gain_spread = 1.0;
  double polarity_flip_prob = 0.0;
  /// Per-subject morphology variation (relative spread of wave amplitudes/widths).
  double morphology_jitter = 0.0;
  std::uint64_t seed = 0;
};

/// Ground truth recorded while generating one record.
struct SynthTruth {
  SynthClass label = SynthClass::sinus;
  double rate_bpm = 0;
  double mean_rr_seconds = 0;
  std::vector<double> beat_times;       // seconds, R-peak centre of every beat
  std::vector<double> ectopic_times;    // subset that are ectopic
  std::vector<int> ectopic_frames;      // frames (of n_frames) containing an ectopic centre
  std::vector<double> channel_gains;
};

struct SynthCorpus {
  DatasetManifest manifest;             // relative paths "records/<id>.bin"; root left empty
  std::vector<SignalRecord> records;
  std::vector<SynthTruth> truth;
};

/// Deterministic under config.seed. Sample values are float32-exact:
/// records survive a store/load round trip unchanged.
SynthCorpus synth_generate(const SynthConfig& config);

/// Writes manifest.json and the record files under `dir`; returns the
/// manifest with `root` set to dir.
DatasetManifest write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

/// Frame index (of n_frames over `length` samples at fs) containing time t.
int frame_of_time(double t_seconds, int sampling_rate_hz, int length, int n_frames);

}  // namespace isl::data
