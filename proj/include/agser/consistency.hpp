#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace agser {

/// Lowercases and splits on every run of characters outside [a-z0-9].
std::vector<std::string> rouge_tokenize(std::string_view text);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// Rouge-L F1 over already-tokenized sequences. Both empty -> 1, one empty -> 0.
double rouge_l_tokens(std::span<const std::string> candidate, std::span<const std::string> reference);

/// Rouge-L F1 between two answers after rouge_tokenize.
double rouge_l(std::string_view candidate, std::string_view reference);

struct ConsistencyPair {
  double r_att = 0.0;
  double r_non_att = 0.0;
};

struct DetectionScore {
  double r = 0.0;
  double lambda = 1.0;
};

/// r = lambda * r_att - r_non_att. Lower means a more likely hallucination.
DetectionScore hallucination_score(const ConsistencyPair& pair, double lambda);

}  // namespace agser
