#pragma once

#include "isl/data/split.hpp"
#include "isl/data/synth.hpp"
#include "isl/model/encoder.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace isl::fixtures {

/// Kind of the isl::Error thrown by `f`, or "" when nothing is thrown.
std::string error_kind(const std::function<void()>& f);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

/// Desk-scale corpus settings: fs 100 Hz, 10 s records.
data::SynthConfig desk_synth(int subjects_per_class, std::uint64_t seed);

struct SplitRecords {
  std::vector<data::SignalRecord> train, validation, test;
};

SplitRecords split_records(const data::SynthCorpus& corpus, const data::SplitAssignment& split);

/// Deterministic frame with smooth, non-constant channels.
data::SignalMatrix smooth_frame(int channels, int length, double phase = 0.0);

/// H=2, E=4 encoder (l=20 frames give 4 recurrent steps).
model::EncoderConfig tiny_encoder_config();

}  // namespace isl::fixtures
