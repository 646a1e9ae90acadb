#include "isl/data/signal.hpp"

#include "isl/error.hpp"

namespace isl::data {

FrameSequence segment(const SignalMatrix& samples, int n_frames) {
  if (n_frames < 1) throw Error("invalid_argument", "segment: n_frames must be >= 1");
  const auto length = samples.cols();
  if (length % n_frames != 0) {
    throw Error("not_divisible", "segment: record length " + std::to_string(length) +
                                     " is not divisible by " + std::to_string(n_frames) + " frames");
  }
  const auto frame_len = length / n_frames;
  FrameSequence out;
  out.frames.reserve(n_frames);
  for (int i = 0; i < n_frames; ++i) {
    out.frames.emplace_back(samples.middleCols(i * frame_len, frame_len));
  }
  return out;
}

SignalMatrix concatenate(const FrameSequence& frames) {
  if (frames.frames.empty()) return {};
  const auto rows = frames.frames.front().rows();
  const auto frame_len = frames.frames.front().cols();
  SignalMatrix out(rows, frame_len * static_cast<Eigen::Index>(frames.size()));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames.frames[i].rows() != rows || frames.frames[i].cols() != frame_len) {
      throw Error("shape_mismatch", "concatenate: frames differ in shape");
    }
    out.middleCols(static_cast<Eigen::Index>(i) * frame_len, frame_len) = frames.frames[i];
  }
  return out;
}

}  // namespace isl::data
