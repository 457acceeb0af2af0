#include "agser/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "agser/consistency.hpp"
#include "agser/error.hpp"

namespace agser {

double auc(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size())
    throw Error(ErrorKind::Structural, "auc: " + std::to_string(scores.size()) + " scores but " +
                                           std::to_string(labels.size()) + " labels");
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw Error(ErrorKind::UndefinedMetric,
                "AUC needs both hallucinated and non-hallucinated samples (got " +
                    std::to_string(n_pos) + " positive, " + std::to_string(n_neg) + " negative)");
  for (double s : scores)
    if (std::isnan(s)) throw Error(ErrorKind::Validation, "auc: NaN score");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Mid-ranks (1-based), summed over positives.
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]]) positive_rank_sum += mid_rank;
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

Distribution bin_distribution(std::span<const double> values) {
  Distribution counts{};
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0))
      throw Error(ErrorKind::Validation, "bin_distribution: value " + std::to_string(v) + " outside [0, 1]");
    const std::size_t bin = v < 0.25 ? 0 : v < 0.5 ? 1 : v < 0.75 ? 2 : 3;
    counts[bin] += 1.0;
  }
  if (values.empty()) return counts;
  const auto n = static_cast<double>(values.size());
  for (auto& c : counts) c /= n;
  return counts;
}

std::string_view to_string(LabelMode mode) {
  return mode == LabelMode::ExactMatch ? "exact" : "rouge";
}

LabelMode parse_label_mode(std::string_view name) {
  if (name == "rouge") return LabelMode::RougeThreshold;
  if (name == "exact") return LabelMode::ExactMatch;
  throw Error(ErrorKind::Configuration, "unknown label mode '" + std::string(name) + "' (expected rouge|exact)");
}

bool label_correctness(std::string_view original_answer, std::string_view gold, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw Error(ErrorKind::Configuration, "threshold must lie in (0, 1]");
  return rouge_l(original_answer, gold) >= threshold;
}

bool label_exact_match(std::string_view original_answer, std::string_view gold) {
  return rouge_tokenize(original_answer) == rouge_tokenize(gold);
}

}  // namespace agser
