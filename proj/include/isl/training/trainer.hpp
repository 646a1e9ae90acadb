#pragma once

#include "isl/augment/augment.hpp"
#include "isl/data/manifest.hpp"
#include "isl/data/split.hpp"
#include "isl/model/discriminator.hpp"
#include "isl/model/encoder.hpp"
#include "isl/stationarity/kpss.hpp"
#include "isl/training/config.hpp"
#include "isl/training/optimizer.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace isl::training {

/// Parameters plus optimizer moments.
struct TrainState {
  model::EncoderParams encoder;
  model::DiscriminatorParams discriminator;
  model::EncoderParams m_enc, v_enc;
  model::DiscriminatorParams m_disc, v_disc;
  std::uint64_t step = 0;
  int epoch = 0;  // completed epochs
  double best_loss = 0;
  int best_epoch = 0;

  /// Seeded initial parameters, zero moments.
  static TrainState initial(const TrainConfig& config, int channels);
};

/// One record of a batch, already prepared for a joint step.
struct PreparedRecord {
  std::string subject_id;
  data::FrameSequence raw;
  data::FrameSequence view1;
  data::FrameSequence view2;
  std::vector<int> pair_labels;  // N-1 KPSS pseudo-labels on raw frames
};

struct StepLosses {
  double total = 0;
  double contrastive = 0;
  double discriminator = 0;  // mean BCE over the B(N-1) neighbouring pairs
};

struct StepGradients {
  model::EncoderParams encoder;
  model::DiscriminatorParams discriminator;
};

/// Losses and gradients for one batch without updating anything.
/// Throws isl::Error("duplicate_subject") if two records share a subject.
StepLosses batch_loss(const TrainState& state, std::span<const PreparedRecord> batch, const TrainConfig& config,
                      StepGradients* grads);

/// batch_loss followed by one AdamW update of encoder and discriminator.
StepLosses joint_step(TrainState& state, std::span<const PreparedRecord> batch, const TrainConfig& config);

/// Record order for one epoch: a seeded permutation cut into batches of
/// distinct subjects. A final single-record batch joins the previous batch
/// when that keeps subjects distinct.
std::vector<std::vector<std::size_t>> epoch_batches(const std::vector<std::string>& subjects, int batch_size,
                                                    std::uint64_t seed, int epoch);

struct EpochLog {
  int epoch = 0;
  double loss_total = 0;
  double loss_c = 0;
  double loss_d = 0;
  double wall_time_s = 0;
};

struct PretrainOptions {
  /// Receives last.ckpt, best.ckpt, encoder.ckpt, train_log.jsonl and the
  /// KPSS cache; nothing is written when empty.
  std::filesystem::path out_dir;
  bool resume = false;
  int threads = 1;
  std::function<void(const EpochLog&)> on_epoch;
};

struct PretrainResult {
  TrainState state;
  std::vector<EpochLog> log;
  std::vector<StepLosses> steps;
};

/// KPSS pseudo-labels for every record, through the sidecar cache in
/// `cache_dir` when it is non-empty.
std::vector<std::vector<int>> pair_labels_for(const std::vector<data::SignalRecord>& records, int n_frames,
                                              const std::filesystem::path& cache_dir, int threads);

PretrainResult pretrain_records(const std::vector<data::SignalRecord>& records, const TrainConfig& config,
                                const PretrainOptions& options);

/// Pretrains on the training split of the manifest.
PretrainResult pretrain(const data::DatasetManifest& manifest, const data::SplitAssignment& split,
                        const TrainConfig& config, const PretrainOptions& options);

/// Training-state checkpoint (kind "train_state", float64 arrays so a resumed
/// run continues bit for bit).
void save_checkpoint(const std::filesystem::path& path, const TrainState& state, const TrainConfig& config);
/// Errors: "config_mismatch" when the digest differs from `config`, plus the
/// errors of model::read_checkpoint.
TrainState load_checkpoint(const std::filesystem::path& path, const TrainConfig& config);

}  // namespace isl::training
