#pragma once

#include "isl/data/signal.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace isl::stationarity {

/// Level-stationarity KPSS statistic with a Bartlett-kernel long-run
/// variance over `lag` autocovariances. Requires at least 4 samples; throws
/// isl::Error("degenerate_series") when the long-run variance is zero.
double kpss_statistic(std::span<const double> series, int lag);

/// Interpolated p-value from the level-case critical values
/// {0.347: 0.10, 0.463: 0.05, 0.574: 0.025, 0.739: 0.01}, clamped to [0.01, 0.10].
double kpss_pvalue(double statistic);

/// floor(4 * (T/100)^(1/4)).
int default_lag(int length);

struct KpssResult {
  double statistic = 0;
  double p_value = 0.1;
  int lag = 0;
};

/// Statistic, p-value and the lag used (default_lag when lag < 0).
KpssResult kpss_test(std::span<const double> series, int lag = -1);

inline constexpr double kStationaryThreshold = 0.05;

struct PairLabel {
  int label = 1;                       // 1 stationary, 0 not
  double min_p = 0.1;                  // over non-degenerate channels; 0.1 if none
  std::vector<double> channel_p;       // NaN where the channel was degenerate
};

/// Joins two frames along time and tests every channel; the pair is
/// non-stationary if any non-degenerate channel has p < 0.05.
PairLabel label_pair(const data::SignalMatrix& frame, const data::SignalMatrix& next);

struct PairLabelSet {
  std::vector<int> labels;
  std::vector<double> min_p;
};

/// Labels the N-1 neighbouring pairs of a frame sequence (N >= 2).
PairLabelSet label_record(const data::FrameSequence& frames);

/// Sidecar `<record_id>.kpss.json`: {"record_id", "labels": [...], "min_p": [...]}.
void save_label_cache(const std::filesystem::path& path, const std::string& record_id, const PairLabelSet& labels);
PairLabelSet load_label_cache(const std::filesystem::path& path);

}  // namespace isl::stationarity
