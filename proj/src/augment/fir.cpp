#include "isl/augment/fir.hpp"

#include "isl/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace isl::augment {

namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  return std::sin(M_PI * x) / (M_PI * x);
}

// Windowed ideal lowpass (cutoff as a fraction of Nyquist), unscaled.
std::vector<double> windowed_lowpass(double cutoff, int taps) {
  std::vector<double> h(static_cast<std::size_t>(taps));
  const double centre = 0.5 * (taps - 1);
  for (int n = 0; n <= taps / 2; ++n) {
    const double m = n - centre;
    const double window = 0.54 - 0.46 * std::cos(2.0 * M_PI * n / (taps - 1));
    h[static_cast<std::size_t>(n)] = cutoff * sinc(cutoff * m) * window;
    h[static_cast<std::size_t>(taps - 1 - n)] = h[static_cast<std::size_t>(n)];
  }
  return h;
}

double gain_at(std::span<const double> h, double normalized_freq) {
  // normalized_freq in cycles/sample
  std::complex<double> acc = 0;
  for (std::size_t n = 0; n < h.size(); ++n) {
    acc += h[n] * std::polar(1.0, -2.0 * M_PI * normalized_freq * static_cast<double>(n));
  }
  return std::abs(acc);
}

}  // namespace

int default_bandpass_taps(int sampling_rate_hz) { return 3 * sampling_rate_hz + 1; }

std::vector<double> design_fir_bandpass(double low_hz, double high_hz, int sampling_rate_hz, int taps) {
  if (sampling_rate_hz <= 0) throw Error("invalid_band", "design_fir_bandpass: sampling rate must be positive");
  if (taps <= 0) taps = default_bandpass_taps(sampling_rate_hz);
  if (taps % 2 == 0) throw Error("invalid_band", "design_fir_bandpass: tap count must be odd");
  const double nyquist = 0.5 * sampling_rate_hz;
  if (!(low_hz > 0) || !(high_hz > low_hz) || !(low_hz < nyquist)) {
    throw Error("invalid_band", "design_fir_bandpass: need 0 < low < high and low < fs/2");
  }
  const double lo = low_hz / nyquist;
  const bool highpass = high_hz >= nyquist;
  std::vector<double> h;
  double scale_freq;  // cycles/sample at which the gain is normalised to 1
  if (highpass) {
    // Spectral inversion of a lowpass at `low`: delta - lowpass.
    h = windowed_lowpass(lo, taps);
    for (auto& v : h) v = -v;
    h[static_cast<std::size_t>(taps / 2)] += 1.0;
    scale_freq = 0.5;
  } else {
    const double hi = high_hz / nyquist;
    const auto upper = windowed_lowpass(hi, taps);
    const auto lower = windowed_lowpass(lo, taps);
    h.resize(upper.size());
    for (std::size_t n = 0; n < h.size(); ++n) h[n] = upper[n] - lower[n];
    scale_freq = 0.25 * (lo + hi);
  }
  const double g = gain_at(h, scale_freq);
  for (auto& v : h) v /= g;
  return h;
}

double magnitude_response(std::span<const double> taps, double frequency_hz, int sampling_rate_hz) {
  return gain_at(taps, frequency_hz / sampling_rate_hz);
}

std::vector<double> filter_aligned(std::span<const double> taps, std::span<const double> x) {
  if (taps.size() % 2 == 0) throw Error("invalid_argument", "filter_aligned: tap count must be odd");
  if (x.size() <= taps.size()) {
    throw Error("signal_too_short", "filter_aligned: signal length " + std::to_string(x.size()) +
                                        " must exceed tap count " + std::to_string(taps.size()));
  }
  const long half = static_cast<long>(taps.size() / 2);
  const long n = static_cast<long>(x.size());
  const long k = static_cast<long>(taps.size());
  std::vector<double> padded(static_cast<std::size_t>(n + 2 * half));
  for (long i = 0; i < n + 2 * half; ++i) {
    const long src = std::clamp(i - half, 0L, n - 1);
    padded[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(src)];
  }
  std::vector<double> out(x.size());
  // y[t] = sum_j taps[j] * padded[t + k - 1 - j]; symmetric taps make this a correlation too.
  for (long t = 0; t < n; ++t) {
    double acc = 0;
    const double* p = padded.data() + t + k - 1;
    for (long j = 0; j < k; ++j) acc += taps[static_cast<std::size_t>(j)] * p[-j];
    out[static_cast<std::size_t>(t)] = acc;
  }
  return out;
}

}  // namespace isl::augment
