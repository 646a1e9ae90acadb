#pragma once

#include "isl/data/signal.hpp"

#include <filesystem>
#include <optional>

namespace isl::data {

// Record file layout (little-endian):
//   bytes  0..3   magic "ISL1"
//   bytes  4..7   u32 channels (H)
//   bytes  8..11  u32 length (L)
//   bytes 12..15  u32 reserved, 0
//   then H*L float32 samples, channel-major (all of channel 0, then channel 1, ...)

struct RecordShape {
  int channels = 0;
  int length = 0;
};

void store_record(const std::filesystem::path& path, const SignalMatrix& samples);

/// Loads float32 samples widened to double. When `expected` is given, the
/// header must match it ("shape_mismatch" otherwise). Other failures:
/// "io", "bad_magic", "truncated_file".
SignalMatrix load_record(const std::filesystem::path& path,
                         std::optional<RecordShape> expected = std::nullopt);

/// Reads only the 16-byte header.
RecordShape read_record_shape(const std::filesystem::path& path);

/// Rounds every sample to float32 precision, the resolution of record files.
void quantize_to_float(SignalMatrix& samples);

}  // namespace isl::data
