#pragma once

#include <array>
#include <span>
#include <vector>

namespace isl::augment {

/// db5 scaling (reconstruction lowpass) filter, 10 taps.
const std::array<double, 10>& db5_lowpass();

/// Multilevel coefficients. details[0] is the coarsest level (D5 for a
/// 5-level transform) and details.back() is D1, mirroring {A5, D5, ..., D1}.
struct WaveletCoeffs {
  std::vector<double> approximation;
  std::vector<std::vector<double>> details;
  std::vector<std::size_t> input_lengths;  // signal length entering each level, finest first
};

/// Single-level analysis with half-sample symmetric extension;
/// each output has floor((n + 9) / 2) coefficients.
void dwt_db5_level(std::span<const double> x, std::vector<double>& approx, std::vector<double>& detail);

/// Single-level synthesis; output length 2*m - 8 for m input coefficients.
std::vector<double> idwt_db5_level(std::span<const double> approx, std::span<const double> detail);

/// Pyramidal decomposition. Throws isl::Error("series_too_short") if any
/// level's input is shorter than the filter.
WaveletCoeffs dwt_db5(std::span<const double> series, int levels = 5);

/// Synthesis of all levels, truncated to target_length. Throws
/// isl::Error("inconsistent_lengths") when the arrays cannot come from a
/// signal of that length.
std::vector<double> idwt_db5(const WaveletCoeffs& coeffs, std::size_t target_length);

}  // namespace isl::augment
