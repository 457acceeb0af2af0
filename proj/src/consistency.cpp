#include "agser/consistency.hpp"

#include <algorithm>
#include <cmath>

#include "agser/error.hpp"

namespace agser {

std::vector<std::string> rouge_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 'A' && c <= 'Z') {
      cur += static_cast<char>(c - 'A' + 'a');
    } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      cur += static_cast<char>(c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() < b.size()) std::swap(a, b);
  // Two rows over the shorter sequence.
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l_tokens(std::span<const std::string> candidate,
                      std::span<const std::string> reference) {
  if (candidate.empty() && reference.empty()) return 1.0;
  if (candidate.empty() || reference.empty()) return 0.0;
  const auto lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0.0) return 0.0;
  const double precision = lcs / static_cast<double>(candidate.size());
  const double recall = lcs / static_cast<double>(reference.size());
  return 2.0 * precision * recall / (precision + recall);
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto c = rouge_tokenize(candidate);
  const auto r = rouge_tokenize(reference);
  return rouge_l_tokens(c, r);
}

DetectionScore hallucination_score(const ConsistencyPair& pair, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw Error(ErrorKind::Configuration, "lambda must be a positive number");
  const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(pair.r_att) || !in_unit(pair.r_non_att))
    throw Error(ErrorKind::Validation, "consistency scores must lie in [0, 1]");
  return {lambda * pair.r_att - pair.r_non_att, lambda};
}

}  // namespace agser
