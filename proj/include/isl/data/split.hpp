#pragma once

#include "isl/data/manifest.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace isl::data {

enum class Split { train, validation, test };

/// Serialized names: "train", "val", "test".
std::string_view to_string(Split split);
Split parse_split(std::string_view name);

struct SplitAssignment {
  std::map<std::string, Split> by_subject;
  std::uint64_t seed = 0;

  Split of(const std::string& subject_id) const;
  std::size_t count(Split split) const;
};

struct SplitRatios {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
};

/// Shuffles the distinct subjects with `seed` and cuts them by `ratios`
/// (rounded counts, test takes the remainder). Needs at least 5 subjects.
SplitAssignment split_subjectwise(const DatasetManifest& manifest, SplitRatios ratios, std::uint64_t seed);

/// {"seed": n, "subjects": {subject_id: "train"|"val"|"test"}}
void save_split(const SplitAssignment& split, const std::filesystem::path& path);
SplitAssignment load_split(const std::filesystem::path& path);

/// Indices of manifest entries whose subject lies in `which`.
std::vector<std::size_t> entries_in(const DatasetManifest& manifest, const SplitAssignment& split, Split which);

}  // namespace isl::data
