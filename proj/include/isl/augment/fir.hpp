#pragma once

#include <span>
#include <vector>

namespace isl::augment {

/// Default tap count for the middle-band filter: a 3 s impulse response.
int default_bandpass_taps(int sampling_rate_hz);

/// Hamming-windowed sinc bandpass [low_hz, high_hz], linear phase, scaled to
/// unit gain at the passband centre. When high_hz >= fs/2 the upper edge is
/// dropped and a highpass at low_hz is designed instead (unit gain at
/// Nyquist). `taps` must be odd; taps <= 0 selects default_bandpass_taps(fs).
std::vector<double> design_fir_bandpass(double low_hz = 0.5, double high_hz = 50.0, int sampling_rate_hz = 500,
                                        int taps = 0);

/// |H(f)| of an FIR filter at frequency f.
double magnitude_response(std::span<const double> taps, double frequency_hz, int sampling_rate_hz);

/// Zero-phase application: edge-value padding of (taps-1)/2 samples on each
/// side, then a 'valid' convolution, so the output is time aligned with x.
std::vector<double> filter_aligned(std::span<const double> taps, std::span<const double> x);

}  // namespace isl::augment
