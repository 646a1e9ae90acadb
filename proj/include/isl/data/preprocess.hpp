#pragma once

#include "isl/data/signal.hpp"

#include <string_view>
#include <vector>

namespace isl::data {

enum class RejectReason { none, null_values, constant_run };

std::string_view to_string(RejectReason reason);

struct Validation {
  RejectReason reason = RejectReason::none;
  bool accepted() const { return reason == RejectReason::none; }
};

inline constexpr int kMaxConstantRun = 500;

/// Rejects records with any non-finite sample, or with a channel whose
/// longest run of consecutive identical values exceeds kMaxConstantRun.
Validation validate_record(const SignalRecord& record);

/// Longest run of consecutive identical values in one channel.
int longest_constant_run(const SignalMatrix& samples, int channel);

/// Cuts floor(duration / target) full windows from the start of the record;
/// the remainder is discarded. Windows failing validate_record are dropped.
/// Returns an empty list for records shorter than the target.
std::vector<SignalRecord> truncate_long(const SignalRecord& record, double target_seconds);

}  // namespace isl::data
