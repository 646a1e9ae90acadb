#include "isl/augment/wavelet.hpp"

#include "isl/error.hpp"

#include <string>

namespace isl::augment {

namespace {

constexpr std::size_t kTaps = 10;

// Filter bank derived from the scaling filter:
//   dec_lo[k] = h[9-k], dec_hi[k] = (-1)^(k+1) h[k], rec_lo = h, rec_hi[k] = (-1)^k h[9-k].
struct FilterBank {
  std::array<double, kTaps> dec_lo, dec_hi, rec_lo, rec_hi;
};

const FilterBank& bank() {
  static const FilterBank fb = [] {
    FilterBank b{};
    const auto& h = db5_lowpass();
    for (std::size_t k = 0; k < kTaps; ++k) {
      b.rec_lo[k] = h[k];
      b.dec_lo[k] = h[kTaps - 1 - k];
      b.dec_hi[k] = (k % 2 == 0 ? -1.0 : 1.0) * h[k];
      b.rec_hi[k] = (k % 2 == 0 ? 1.0 : -1.0) * h[kTaps - 1 - k];
    }
    return b;
  }();
  return fb;
}

// Half-sample symmetric extension: ... x1 x0 | x0 x1 ... x(n-1) | x(n-1) x(n-2) ...
double extended(std::span<const double> x, long i) {
  const long n = static_cast<long>(x.size());
  const long period = 2 * n;
  long k = i % period;
  if (k < 0) k += period;
  return k < n ? x[static_cast<std::size_t>(k)] : x[static_cast<std::size_t>(period - 1 - k)];
}

std::size_t coeff_length(std::size_t n) { return (n + kTaps - 1) / 2; }

// Valid part of (upsampled coeffs) * filter, length 2m - taps + 2.
void upsample_valid_add(std::span<const double> c, const std::array<double, kTaps>& f, std::vector<double>& out) {
  const long m = static_cast<long>(c.size());
  const long len = 2 * m - static_cast<long>(kTaps) + 2;
  for (long idx = 0; idx < len; ++idx) {
    const long pos = idx + static_cast<long>(kTaps) - 2;
    double sum = 0;
    // pos - j must be even and map to a coefficient index in range.
    for (long j = pos % 2; j < static_cast<long>(kTaps); j += 2) {
      const long q = (pos - j) / 2;
      if (q >= 0 && q < m) sum += f[static_cast<std::size_t>(j)] * c[static_cast<std::size_t>(q)];
    }
    out[static_cast<std::size_t>(idx)] += sum;
  }
}

}  // namespace

const std::array<double, 10>& db5_lowpass() {
  static const std::array<double, 10> h = {
      0.16010239797419293,  0.6038292697971896,    0.7243085284377729,  0.13842814590132074,
      -0.24229488706638203, -0.032244869584638375, 0.07757149384004572, -0.006241490212798274,
      -0.012580751999081999, 0.0033357252854737712,
  };
  return h;
}

void dwt_db5_level(std::span<const double> x, std::vector<double>& approx, std::vector<double>& detail) {
  const auto& fb = bank();
  const std::size_t out_len = coeff_length(x.size());
  approx.assign(out_len, 0.0);
  detail.assign(out_len, 0.0);
  for (std::size_t o = 0; o < out_len; ++o) {
    const long i = 1 + 2 * static_cast<long>(o);
    double a = 0, d = 0;
    for (std::size_t j = 0; j < kTaps; ++j) {
      const double v = extended(x, i - static_cast<long>(j));
      a += fb.dec_lo[j] * v;
      d += fb.dec_hi[j] * v;
    }
    approx[o] = a;
    detail[o] = d;
  }
}

std::vector<double> idwt_db5_level(std::span<const double> approx, std::span<const double> detail) {
  if (approx.size() != detail.size() || approx.size() < kTaps / 2) {
    throw Error("inconsistent_lengths", "idwt_db5_level: coefficient arrays mismatch");
  }
  const auto& fb = bank();
  std::vector<double> out(2 * approx.size() - kTaps + 2, 0.0);
  upsample_valid_add(approx, fb.rec_lo, out);
  upsample_valid_add(detail, fb.rec_hi, out);
  return out;
}

WaveletCoeffs dwt_db5(std::span<const double> series, int levels) {
  if (levels < 1) throw Error("invalid_argument", "dwt_db5: levels must be >= 1");
  WaveletCoeffs out;
  std::vector<double> current(series.begin(), series.end());
  std::vector<std::vector<double>> finest_first;
  for (int level = 0; level < levels; ++level) {
    if (current.size() < kTaps) {
      throw Error("series_too_short", "dwt_db5: level " + std::to_string(level + 1) + " input has " +
                                          std::to_string(current.size()) + " samples, need >= 10");
    }
    out.input_lengths.push_back(current.size());
    std::vector<double> a, d;
    dwt_db5_level(current, a, d);
    finest_first.push_back(std::move(d));
    current = std::move(a);
  }
  out.approximation = std::move(current);
  out.details.assign(finest_first.rbegin(), finest_first.rend());
  return out;
}

std::vector<double> idwt_db5(const WaveletCoeffs& coeffs, std::size_t target_length) {
  const std::size_t levels = coeffs.details.size();
  if (levels == 0) throw Error("inconsistent_lengths", "idwt_db5: no detail arrays");
  // Input length of each level, reconstructed from the target when not recorded.
  std::vector<std::size_t> lengths = coeffs.input_lengths;
  if (lengths.empty()) {
    std::size_t n = target_length;
    for (std::size_t l = 0; l < levels; ++l) {
      lengths.push_back(n);
      n = coeff_length(n);
    }
  }
  if (lengths.size() != levels || lengths.front() != target_length) {
    throw Error("inconsistent_lengths", "idwt_db5: level lengths do not match target length");
  }
  std::vector<double> current = coeffs.approximation;
  for (std::size_t k = 0; k < levels; ++k) {
    const auto& detail = coeffs.details[k];
    const std::size_t level_input = lengths[levels - 1 - k];
    if (current.size() != coeff_length(level_input) || detail.size() != coeff_length(level_input)) {
      throw Error("inconsistent_lengths", "idwt_db5: coefficient array length does not match level " +
                                              std::to_string(levels - k));
    }
    std::vector<double> rec = idwt_db5_level(current, detail);
    if (rec.size() < level_input) throw Error("inconsistent_lengths", "idwt_db5: reconstruction too short");
    rec.resize(level_input);
    current = std::move(rec);
  }
  return current;
}

}  // namespace isl::augment
