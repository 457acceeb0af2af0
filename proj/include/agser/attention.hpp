#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace agser {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class LayerStrategy { First, Mid, Last, Max, Mean };

std::string_view to_string(LayerStrategy strategy);
/// Accepts "first", "mid", "last", "max", "mean" (case-insensitive).
LayerStrategy parse_strategy(std::string_view name);

/// Post-softmax prefill attention for every layer and head.
///
/// Two storage forms share one type. A full tensor keeps the M x M matrix of
/// each head. A compact tensor keeps only row M (the final query token) of
/// each head, which is all the contribution scores need. Layer and head
/// indices are 0-based here.
class AttentionTensor {
 public:
  AttentionTensor() = default;

  /// heads[layer][head] is an M x M matrix.
  static AttentionTensor full(std::vector<std::vector<Matrix>> heads);
  /// rows[layer][head] is the final-token row of length M.
  static AttentionTensor compact(std::vector<std::vector<std::vector<double>>> rows);

  std::size_t layer_count() const noexcept { return layers_; }
  std::size_t head_count() const noexcept { return heads_; }
  std::size_t token_count() const noexcept { return tokens_; }
  bool has_full_matrices() const noexcept { return full_; }

  /// Throws a structural error on compact tensors.
  const Matrix& matrix(std::size_t layer, std::size_t head) const;
  std::span<const Matrix> layer(std::size_t layer) const;
  std::span<const double> last_row(std::size_t layer, std::size_t head) const;

  /// Drops everything but the final-token rows.
  AttentionTensor to_compact() const;

  /// Row sums (1 +- row_tol) and causal zeros (+- causal_tol); throws
  /// Validation on the first violation.
  void validate(double row_tol = 1e-5, double causal_tol = 1e-9) const;

  bool operator==(const AttentionTensor&) const = default;

 private:
  std::size_t layers_ = 0;
  std::size_t heads_ = 0;
  std::size_t tokens_ = 0;
  bool full_ = false;
  // Flattened [layer * heads_ + head]; 1 x M rows when compact.
  std::vector<Matrix> store_;
};

struct ContributionVector {
  std::vector<double> scores;
  LayerStrategy strategy = LayerStrategy::Mean;
  std::size_t layer_count = 0;
};

/// Sum of head matrices, entry by entry.
Matrix aggregate_heads(std::span<const Matrix> heads);

/// Final row of an aggregated matrix: attention from the last query token to
/// each token.
std::vector<double> last_token_contributions(const Matrix& aggregated);

/// 0-based layer a single-layer strategy reads. Mid is floor(L/2) in 1-based
/// numbering, never below layer 1.
std::size_t strategy_layer(LayerStrategy strategy, std::size_t layer_count);

/// aggregate_heads + last_token_contributions for each layer.
std::vector<std::vector<double>> per_layer_contributions(const AttentionTensor& tensor);

ContributionVector contribution_scores(const AttentionTensor& tensor, LayerStrategy strategy);

/// Interchange JSON: {"L","H","M","layers":[l][h][i][j]} or {"L","H","M","last_rows":[l][h][j]}.
nlohmann::json attention_to_json(const AttentionTensor& tensor, bool compact);
AttentionTensor attention_from_json(const nlohmann::json& j);

}  // namespace agser
