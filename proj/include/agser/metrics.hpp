#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace agser {

/// Rank (Mann-Whitney) AUC with `true` labels as the positive class. Tied
/// scores count half. Throws UndefinedMetric unless both classes are present.
double auc(std::span<const double> scores, const std::vector<bool>& labels);

/// Proportions in [0,0.25), [0.25,0.5), [0.5,0.75), [0.75,1.0].
using Distribution = std::array<double, 4>;
Distribution bin_distribution(std::span<const double> values);

enum class LabelMode { RougeThreshold, ExactMatch };
std::string_view to_string(LabelMode mode);
LabelMode parse_label_mode(std::string_view name);

/// True (not a hallucination) when Rouge-L(answer, gold) >= threshold.
bool label_correctness(std::string_view original_answer, std::string_view gold, double threshold);

/// True when the normalized token sequences are identical.
bool label_exact_match(std::string_view original_answer, std::string_view gold);

}  // namespace agser
