#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace isl::data {

/// Channels x time. Row-major so each channel is contiguous in memory,
/// matching the channel-major record file layout.
using SignalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One subject's multichannel recording, in millivolts.
struct SignalRecord {
  std::string id;
  std::string subject_id;
  SignalMatrix samples;
  int sampling_rate_hz = 500;
  /// Multi-hot over the dataset's class vocabulary; empty when unlabeled.
  std::optional<std::vector<std::uint8_t>> labels;

  int channels() const { return static_cast<int>(samples.rows()); }
  int length() const { return static_cast<int>(samples.cols()); }
  double duration_seconds() const { return static_cast<double>(length()) / sampling_rate_hz; }
};

/// N contiguous, non-overlapping, equal-length slices of a record.
struct FrameSequence {
  std::vector<SignalMatrix> frames;

  std::size_t size() const { return frames.size(); }
  int frame_length() const { return frames.empty() ? 0 : static_cast<int>(frames.front().cols()); }
};

/// Splits samples into n_frames frames; frame i holds columns [i*l, (i+1)*l).
/// Throws isl::Error("not_divisible") when the length is not a multiple of n_frames.
FrameSequence segment(const SignalMatrix& samples, int n_frames);

/// Inverse of segment: concatenates frames along time.
SignalMatrix concatenate(const FrameSequence& frames);

}  // namespace isl::data
