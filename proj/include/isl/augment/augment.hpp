#pragma once

#include "isl/data/signal.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace isl::augment {

using data::SignalMatrix;

enum class AugmentationId { BaselineFilter, BandpassMiddle, ChannelDiff, AmplitudeScale, AmplitudeReverse };

inline constexpr std::array<AugmentationId, 5> kAllAugmentations = {
    AugmentationId::BaselineFilter, AugmentationId::BandpassMiddle, AugmentationId::ChannelDiff,
    AugmentationId::AmplitudeScale, AugmentationId::AmplitudeReverse};

std::string_view to_string(AugmentationId id);
AugmentationId parse_augmentation(std::string_view name);

/// Per channel: 5-level db5 decomposition, details zeroed, reconstruction.
SignalMatrix baseline_filter(const SignalMatrix& x);

/// Per channel: convolution with `taps` (see design_fir_bandpass), group
/// delay removed, output time aligned.
SignalMatrix bandpass_middle(const SignalMatrix& x, const std::vector<double>& taps);

/// Row h becomes x[h+1] - x[h]; the last row becomes x[H-1] - x[0]. Needs H >= 2.
SignalMatrix channel_diff(const SignalMatrix& x);

inline constexpr double kMinScale = 0.5;
inline constexpr double kMaxScale = 2.0;

/// alpha * x with alpha in [0.5, 2].
SignalMatrix amplitude_scale(const SignalMatrix& x, double alpha);

SignalMatrix amplitude_reverse(const SignalMatrix& x);

struct AppliedAugmentation {
  AugmentationId id;
  std::optional<double> alpha;  // AmplitudeScale only
};

struct ViewPair {
  SignalMatrix view1;
  SignalMatrix view2;
  std::array<AppliedAugmentation, 2> applied;
  std::uint64_t seed = 0;
};

/// Holds the middle-band filter for one sampling rate (designed once,
/// read-only afterwards) and applies augmentations.
class Augmenter {
 public:
  explicit Augmenter(int sampling_rate_hz);

  int sampling_rate_hz() const { return fs_; }
  const std::vector<double>& bandpass_taps() const { return taps_; }

  /// Applies one augmentation; AmplitudeScale draws alpha from U[0.5, 2]
  /// with `rng_seed` unless alpha is given.
  SignalMatrix apply(AugmentationId id, const SignalMatrix& x, std::uint64_t rng_seed,
                     std::optional<double> alpha, AppliedAugmentation* applied = nullptr) const;

  /// Draws two distinct augmentations uniformly without replacement and
  /// applies each to a copy of x. Deterministic in `seed`.
  ViewPair sample_views(const SignalMatrix& x, std::uint64_t seed) const;

 private:
  int fs_;
  std::vector<double> taps_;
};

/// The (g1, g2) pair sample_views would draw for `seed`, plus any scale factors.
std::array<AppliedAugmentation, 2> draw_view_augmentations(std::uint64_t seed);

}  // namespace isl::augment
