#include "isl/stationarity/kpss.hpp"

#include "isl/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>

namespace isl::stationarity {

double kpss_statistic(std::span<const double> series, int lag) {
  const auto n = series.size();
  if (n < 4) throw Error("invalid_argument", "kpss_statistic: need at least 4 samples");
  if (lag < 0) throw Error("invalid_argument", "kpss_statistic: lag must be non-negative");
  double mean = 0;
  for (double x : series) mean += x;
  mean /= static_cast<double>(n);

  std::vector<double> resid(n);
  for (std::size_t t = 0; t < n; ++t) resid[t] = series[t] - mean;

  double partial = 0;
  double sum_sq_partial = 0;
  double gamma0 = 0;
  for (double e : resid) {
    partial += e;
    sum_sq_partial += partial * partial;
    gamma0 += e * e;
  }
  double long_run = gamma0;
  const auto max_lag = std::min<std::size_t>(static_cast<std::size_t>(lag), n - 1);
  for (std::size_t j = 1; j <= max_lag; ++j) {
    double cov = 0;
    for (std::size_t t = j; t < n; ++t) cov += resid[t] * resid[t - j];
    long_run += 2.0 * (1.0 - static_cast<double>(j) / (lag + 1.0)) * cov;
  }
  const double nd = static_cast<double>(n);
  long_run /= nd;
  // relative floor for float-quantised constants
  if (!(long_run > 1e-12 * mean * mean)) {
    throw Error("degenerate_series", "kpss_statistic: series has zero long-run variance");
  }
  return sum_sq_partial / (nd * nd * long_run);
}

double kpss_pvalue(double statistic) {
  if (!(statistic >= 0)) throw Error("invalid_argument", "kpss_pvalue: statistic must be non-negative");
  static constexpr std::array<double, 4> crit = {0.347, 0.463, 0.574, 0.739};
  static constexpr std::array<double, 4> pval = {0.10, 0.05, 0.025, 0.01};
  if (statistic <= crit.front()) return pval.front();
  if (statistic >= crit.back()) return pval.back();
  std::size_t k = 1;
  while (statistic > crit[k]) ++k;
  const double w = (statistic - crit[k - 1]) / (crit[k] - crit[k - 1]);
  return pval[k - 1] + w * (pval[k] - pval[k - 1]);
}

int default_lag(int length) {
  if (length < 4) throw Error("invalid_argument", "default_lag: need at least 4 samples");
  return static_cast<int>(std::floor(4.0 * std::pow(length / 100.0, 0.25)));
}

KpssResult kpss_test(std::span<const double> series, int lag) {
  KpssResult r;
  r.lag = lag < 0 ? default_lag(static_cast<int>(series.size())) : lag;
  r.statistic = kpss_statistic(series, r.lag);
  r.p_value = kpss_pvalue(r.statistic);
  return r;
}

PairLabel label_pair(const data::SignalMatrix& frame, const data::SignalMatrix& next) {
  if (frame.rows() != next.rows() || frame.cols() != next.cols()) {
    throw Error("shape_mismatch", "label_pair: frames differ in shape");
  }
  const auto len = frame.cols();
  const int lag = default_lag(static_cast<int>(2 * len));
  PairLabel out;
  out.channel_p.assign(static_cast<std::size_t>(frame.rows()), std::numeric_limits<double>::quiet_NaN());
  std::vector<double> joined(static_cast<std::size_t>(2 * len));
  bool any = false;
  for (Eigen::Index h = 0; h < frame.rows(); ++h) {
    for (Eigen::Index t = 0; t < len; ++t) {
      joined[static_cast<std::size_t>(t)] = frame(h, t);
      joined[static_cast<std::size_t>(len + t)] = next(h, t);
    }
    try {
      const double p = kpss_pvalue(kpss_statistic(joined, lag));
      out.channel_p[static_cast<std::size_t>(h)] = p;
      out.min_p = any ? std::min(out.min_p, p) : p;
      any = true;
    } catch (const Error& e) {
      if (e.kind() != "degenerate_series") throw;
    }
  }
  out.label = out.min_p < kStationaryThreshold ? 0 : 1;
  return out;
}

PairLabelSet label_record(const data::FrameSequence& frames) {
  if (frames.size() < 2) throw Error("invalid_argument", "label_record: need at least 2 frames");
  PairLabelSet out;
  for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
    const PairLabel p = label_pair(frames.frames[i], frames.frames[i + 1]);
    out.labels.push_back(p.label);
    out.min_p.push_back(p.min_p);
  }
  return out;
}

void save_label_cache(const std::filesystem::path& path, const std::string& record_id, const PairLabelSet& labels) {
  nlohmann::json doc = {{"record_id", record_id}, {"labels", labels.labels}, {"min_p", labels.min_p}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("io", "cannot write " + tmp.string());
    out << doc.dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

PairLabelSet load_label_cache(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path.string());
  try {
    const auto doc = nlohmann::json::parse(in);
    PairLabelSet out;
    out.labels = doc.at("labels").get<std::vector<int>>();
    out.min_p = doc.at("min_p").get<std::vector<double>>();
    if (out.labels.size() != out.min_p.size()) throw Error("bad_cache", "kpss cache: length mismatch");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad_cache", "kpss cache " + path.string() + ": " + e.what());
  }
}

}  // namespace isl::stationarity
