#include "isl/data/preprocess.hpp"

#include "isl/error.hpp"

#include <cmath>

namespace isl::data {

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::none: return "none";
    case RejectReason::null_values: return "null_values";
    case RejectReason::constant_run: return "constant_run";
  }
  return "unknown";
}

int longest_constant_run(const SignalMatrix& samples, int channel) {
  const auto row = samples.row(channel);
  if (row.size() == 0) return 0;
  int best = 1;
  int run = 1;
  for (Eigen::Index t = 1; t < row.size(); ++t) {
    run = (row(t) == row(t - 1)) ? run + 1 : 1;
    if (run > best) best = run;
  }
  return best;
}

Validation validate_record(const SignalRecord& record) {
  if (!record.samples.allFinite()) return {RejectReason::null_values};
  for (int h = 0; h < record.channels(); ++h) {
    if (longest_constant_run(record.samples, h) > kMaxConstantRun) return {RejectReason::constant_run};
  }
  return {};
}

std::vector<SignalRecord> truncate_long(const SignalRecord& record, double target_seconds) {
  if (!(target_seconds > 0)) throw Error("invalid_argument", "truncate_long: target must be positive");
  const double window = target_seconds * record.sampling_rate_hz;
  const auto window_len = static_cast<Eigen::Index>(std::llround(window));
  if (std::abs(window - static_cast<double>(window_len)) > 1e-9) {
    throw Error("invalid_argument", "truncate_long: target is not a whole number of samples");
  }
  std::vector<SignalRecord> out;
  if (window_len == 0 || record.length() < window_len) return out;
  const auto count = record.length() / window_len;
  for (Eigen::Index k = 0; k < count; ++k) {
    SignalRecord seg;
    seg.id = count == 1 ? record.id : record.id + "_s" + std::to_string(k);
    seg.subject_id = record.subject_id;
    seg.sampling_rate_hz = record.sampling_rate_hz;
    seg.labels = record.labels;
    seg.samples = record.samples.middleCols(k * window_len, window_len);
    if (validate_record(seg).accepted()) out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace isl::data
