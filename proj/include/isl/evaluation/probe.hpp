#pragma once

#include "isl/data/signal.hpp"
#include "isl/model/encoder.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace isl::evaluation {

using model::Matrix;
using model::Vector;

/// Subject embeddings z = fuse(encode(frames)) for each record, E x n.
Matrix embed_records(const model::EncoderParams& encoder, std::span<const data::SignalRecord> records, int n_frames,
                     int threads = 1);

/// K independent sigmoid outputs over an embedding.
struct ProbeParams {
  Matrix weight;  // K x E
  Vector bias;    // K

  /// Logits K x n for embeddings E x n.
  Matrix logits(const Matrix& z) const;
  /// Per-class probabilities as scores[k][i].
  std::vector<std::vector<double>> scores(const Matrix& z) const;
};

struct ProbeOptions {
  double learning_rate = 0.1;
  int max_epochs = 200;
  double tolerance = 1e-6;  // stop once the loss changes by less
};

/// Column k of `targets` (K x n) as 0/1 doubles.
Matrix label_matrix(std::span<const data::SignalRecord> records, std::size_t num_classes);

/// Full-batch gradient descent on the mean BCE, zero initialisation.
/// Features are standardised with the training mean/std and the scaling is
/// folded back into the returned weights.
ProbeParams train_logistic(const Matrix& z, const Matrix& targets, const ProbeOptions& options = {});

/// Frozen-encoder probe. Throws isl::Error("encoder_modified") if the encoder
/// digest changes, which would indicate a bug.
ProbeParams linear_probe(const model::EncoderParams& encoder, std::span<const data::SignalRecord> train,
                         std::size_t num_classes, int n_frames, const ProbeOptions& options = {}, int threads = 1);

struct FineTuneOptions {
  double learning_rate = 3e-3;
  double weight_decay = 4e-4;
  int epochs = 40;
  int batch_size = 32;
  int n_frames = 10;
  int frame_chunk = 0;
  std::uint64_t seed = 0;
  /// Start the head from the logistic probe on the initial encoder's
  /// embeddings instead of zero.
  bool probe_init = true;
  ProbeOptions probe;
};

struct FineTuneResult {
  model::EncoderParams encoder;
  ProbeParams head;
};

/// Encoder plus linear head trained jointly on the mean BCE with AdamW.
FineTuneResult fine_tune(const model::EncoderParams& init, std::span<const data::SignalRecord> train,
                         std::size_t num_classes, const FineTuneOptions& options);

/// Deterministic stratified subject subsample: round(f * subjects) subjects
/// (f = 1 keeps everything), drawn round-robin over the first label of each
/// subject in a seeded order. Returns record indices in input order.
/// Throws isl::Error("empty_fraction") if the count rounds to zero.
std::vector<std::size_t> subsample_subjects(std::span<const data::SignalRecord> records, double fraction,
                                            std::uint64_t seed);

}  // namespace isl::evaluation
