#include "isl/augment/augment.hpp"

#include "isl/augment/fir.hpp"
#include "isl/augment/wavelet.hpp"
#include "isl/error.hpp"

#include <random>
#include <string>

namespace isl::augment {

std::string_view to_string(AugmentationId id) {
  switch (id) {
    case AugmentationId::BaselineFilter: return "baseline_filter";
    case AugmentationId::BandpassMiddle: return "bandpass_middle";
    case AugmentationId::ChannelDiff: return "channel_diff";
    case AugmentationId::AmplitudeScale: return "amplitude_scale";
    case AugmentationId::AmplitudeReverse: return "amplitude_reverse";
  }
  return "unknown";
}

AugmentationId parse_augmentation(std::string_view name) {
  for (auto id : kAllAugmentations) {
    if (to_string(id) == name) return id;
  }
  throw Error("invalid_argument", "unknown augmentation '" + std::string(name) + "'");
}

SignalMatrix baseline_filter(const SignalMatrix& x) {
  SignalMatrix out(x.rows(), x.cols());
  const auto n = static_cast<std::size_t>(x.cols());
  for (Eigen::Index h = 0; h < x.rows(); ++h) {
    const std::span<const double> row(x.row(h).data(), n);
    WaveletCoeffs c = dwt_db5(row, 5);
    for (auto& d : c.details) std::fill(d.begin(), d.end(), 0.0);
    const auto rec = idwt_db5(c, n);
    for (std::size_t t = 0; t < n; ++t) out(h, static_cast<Eigen::Index>(t)) = rec[t];
  }
  return out;
}

SignalMatrix bandpass_middle(const SignalMatrix& x, const std::vector<double>& taps) {
  if (x.cols() <= static_cast<Eigen::Index>(taps.size())) {
    throw Error("signal_too_short", "bandpass_middle: length " + std::to_string(x.cols()) +
                                        " must exceed tap count " + std::to_string(taps.size()));
  }
  SignalMatrix out(x.rows(), x.cols());
  const auto n = static_cast<std::size_t>(x.cols());
  for (Eigen::Index h = 0; h < x.rows(); ++h) {
    const auto y = filter_aligned(taps, std::span<const double>(x.row(h).data(), n));
    for (std::size_t t = 0; t < n; ++t) out(h, static_cast<Eigen::Index>(t)) = y[t];
  }
  return out;
}

SignalMatrix channel_diff(const SignalMatrix& x) {
  const auto channels = x.rows();
  if (channels < 2) throw Error("invalid_argument", "channel_diff: needs at least 2 channels");
  SignalMatrix out(channels, x.cols());
  for (Eigen::Index h = 0; h + 1 < channels; ++h) out.row(h) = x.row(h + 1) - x.row(h);
  out.row(channels - 1) = x.row(channels - 1) - x.row(0);
  return out;
}

SignalMatrix amplitude_scale(const SignalMatrix& x, double alpha) {
  if (!(alpha >= kMinScale && alpha <= kMaxScale)) {
    throw Error("invalid_argument", "amplitude_scale: alpha " + std::to_string(alpha) + " outside [0.5, 2]");
  }
  return alpha * x;
}

SignalMatrix amplitude_reverse(const SignalMatrix& x) { return -x; }

Augmenter::Augmenter(int sampling_rate_hz)
    : fs_(sampling_rate_hz), taps_(design_fir_bandpass(0.5, 50.0, sampling_rate_hz)) {}

SignalMatrix Augmenter::apply(AugmentationId id, const SignalMatrix& x, std::uint64_t rng_seed,
                              std::optional<double> alpha, AppliedAugmentation* applied) const {
  if (applied) *applied = {id, std::nullopt};
  switch (id) {
    case AugmentationId::BaselineFilter: return baseline_filter(x);
    case AugmentationId::BandpassMiddle: return bandpass_middle(x, taps_);
    case AugmentationId::ChannelDiff: return channel_diff(x);
    case AugmentationId::AmplitudeScale: {
      if (!alpha) {
        std::mt19937_64 rng(rng_seed);
        alpha = std::uniform_real_distribution<double>(kMinScale, kMaxScale)(rng);
      }
      if (applied) applied->alpha = alpha;
      return amplitude_scale(x, *alpha);
    }
    case AugmentationId::AmplitudeReverse: return amplitude_reverse(x);
  }
  throw Error("invalid_argument", "unknown augmentation");
}

std::array<AppliedAugmentation, 2> draw_view_augmentations(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = static_cast<int>(kAllAugmentations.size());
  const int first = std::uniform_int_distribution<int>(0, n - 1)(rng);
  int second = std::uniform_int_distribution<int>(0, n - 2)(rng);
  if (second >= first) ++second;
  std::array<AppliedAugmentation, 2> out = {AppliedAugmentation{kAllAugmentations[static_cast<std::size_t>(first)], {}},
                                            AppliedAugmentation{kAllAugmentations[static_cast<std::size_t>(second)], {}}};
  std::uniform_real_distribution<double> scale(kMinScale, kMaxScale);
  for (auto& a : out) {
    const double alpha = scale(rng);
    if (a.id == AugmentationId::AmplitudeScale) a.alpha = alpha;
  }
  return out;
}

ViewPair Augmenter::sample_views(const SignalMatrix& x, std::uint64_t seed) const {
  ViewPair pair;
  pair.seed = seed;
  pair.applied = draw_view_augmentations(seed);
  pair.view1 = apply(pair.applied[0].id, x, 0, pair.applied[0].alpha);
  pair.view2 = apply(pair.applied[1].id, x, 0, pair.applied[1].alpha);
  return pair;
}

}  // namespace isl::augment
