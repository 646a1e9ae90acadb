#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace isl::evaluation {

/// Mann-Whitney AUROC with average ranks for ties. Throws
/// isl::Error("undefined_auroc") unless both classes are present.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct MultiLabelAuroc {
  std::vector<std::optional<double>> per_class;  // nullopt where a class is single-valued
  double macro = 0;                              // mean of the defined entries
  std::vector<std::size_t> skipped;
};

/// scores[k][i] and labels[i][k] for class k, sample i. Throws
/// isl::Error("undefined_auroc") when no class is defined.
MultiLabelAuroc multilabel_auroc(const std::vector<std::vector<double>>& scores,
                                 const std::vector<std::vector<std::uint8_t>>& labels);

}  // namespace isl::evaluation
