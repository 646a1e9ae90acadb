#pragma once

#include "isl/data/manifest.hpp"
#include "isl/data/split.hpp"
#include "isl/evaluation/probe.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace isl::evaluation {

enum class Scenario { linear, transfer, semi };

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view name);

/// Train/validation/test records of one downstream corpus.
struct LabeledData {
  std::vector<std::string> classes;
  std::vector<data::SignalRecord> train;
  std::vector<data::SignalRecord> validation;
  std::vector<data::SignalRecord> test;
};

LabeledData load_labeled(const data::DatasetManifest& manifest, const data::SplitAssignment& split, int threads = 1);

/// Encoder for one evaluation seed (a pretrained checkpoint, a pretraining
/// run under that seed, or a random initialisation).
using EncoderProvider = std::function<model::EncoderParams(std::uint64_t seed)>;

struct ScenarioConfig {
  Scenario scenario = Scenario::linear;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::vector<double> fractions = {0.01, 0.05, 0.1, 0.25, 0.5, 1.0};  // semi only
  int n_frames = 10;
  ProbeOptions probe;
  FineTuneOptions fine_tune;  // seed and n_frames are overridden per run
  int threads = 1;

  nlohmann::json to_json() const;
  std::string digest() const;
};

struct SeedResult {
  std::uint64_t seed = 0;
  double fraction = 1.0;
  std::vector<std::optional<double>> per_class;
  double macro = 0;
  std::vector<std::string> skipped_classes;
};

struct Aggregate {
  double fraction = 1.0;
  double mean = 0;
  double std = 0;  // population (ddof 0) over the seeds
  std::vector<std::optional<double>> per_class_mean;
};

struct EvalReport {
  std::string scenario;
  std::vector<std::string> classes;
  std::vector<SeedResult> runs;
  std::vector<Aggregate> aggregates;  // one per fraction (a single entry unless semi)
  std::string config_digest;
  nlohmann::json extra;               // caller-provided provenance

  nlohmann::json to_json() const;
  /// One row per run plus one aggregate row per fraction.
  std::string to_csv() const;
  void write(const std::filesystem::path& dir, const std::string& stem = "report") const;
};

/// Scores test records with a probe; returns the multi-label result.
SeedResult score_test(const ProbeParams& head, const model::EncoderParams& encoder, const LabeledData& data,
                      int n_frames, int threads);

EvalReport run_scenario(const ScenarioConfig& config, const EncoderProvider& encoder_for, const LabeledData& data);

/// CSV with header id,labels,e0..e{E-1}; labels joined by ';'.
void export_embeddings(const model::EncoderParams& encoder, std::span<const data::SignalRecord> records,
                       const std::vector<std::string>& classes, int n_frames, const std::filesystem::path& path,
                       int threads = 1);

}  // namespace isl::evaluation
