#include "isl/evaluation/auroc.hpp"

#include "isl/error.hpp"

#include <algorithm>
#include <numeric>

namespace isl::evaluation {

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw Error("invalid_argument", "auroc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

  double rank_sum = 0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error("undefined_auroc", "auroc needs both positive and negative samples");
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1) / 2) / (np * static_cast<double>(n_neg));
}

MultiLabelAuroc multilabel_auroc(const std::vector<std::vector<double>>& scores,
                                 const std::vector<std::vector<std::uint8_t>>& labels) {
  MultiLabelAuroc out;
  double sum = 0;
  std::size_t defined = 0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    std::vector<std::uint8_t> column(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) column[i] = labels[i].at(k);
    const auto pos = std::count(column.begin(), column.end(), std::uint8_t{1});
    if (pos == 0 || pos == static_cast<long>(column.size())) {
      out.per_class.push_back(std::nullopt);
      out.skipped.push_back(k);
      continue;
    }
    const double a = auroc(scores[k], column);
    out.per_class.push_back(a);
    sum += a;
    ++defined;
  }
  if (defined == 0) throw Error("undefined_auroc", "no class has both positive and negative samples");
  out.macro = sum / static_cast<double>(defined);
  return out;
}

}  // namespace isl::evaluation
