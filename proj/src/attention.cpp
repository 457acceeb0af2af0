#include "agser/attention.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "agser/error.hpp"

namespace agser {

std::string_view to_string(LayerStrategy strategy) {
  switch (strategy) {
    case LayerStrategy::First: return "first";
    case LayerStrategy::Mid: return "mid";
    case LayerStrategy::Last: return "last";
    case LayerStrategy::Max: return "max";
    case LayerStrategy::Mean: return "mean";
  }
  return "unknown";
}

LayerStrategy parse_strategy(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "first") return LayerStrategy::First;
  if (lower == "mid" || lower == "middle") return LayerStrategy::Mid;
  if (lower == "last") return LayerStrategy::Last;
  if (lower == "max") return LayerStrategy::Max;
  if (lower == "mean") return LayerStrategy::Mean;
  throw Error(ErrorKind::Configuration, "unknown layer strategy '" + std::string(name) +
                                            "' (expected first|mid|last|max|mean)");
}

AttentionTensor AttentionTensor::full(std::vector<std::vector<Matrix>> heads) {
  if (heads.empty() || heads.front().empty())
    throw Error(ErrorKind::Structural, "attention tensor needs at least one layer and one head");
  AttentionTensor t;
  t.layers_ = heads.size();
  t.heads_ = heads.front().size();
  t.tokens_ = heads.front().front().rows();
  t.full_ = true;
  if (t.tokens_ == 0) throw Error(ErrorKind::Structural, "attention tensor has no tokens");
  t.store_.reserve(t.layers_ * t.heads_);
  for (std::size_t l = 0; l < heads.size(); ++l) {
    if (heads[l].size() != t.heads_)
      throw Error(ErrorKind::Structural, "layer " + std::to_string(l + 1) + " has " +
                                             std::to_string(heads[l].size()) + " heads, expected " +
                                             std::to_string(t.heads_));
    for (auto& m : heads[l]) {
      if (m.rows() != t.tokens_ || m.cols() != t.tokens_)
        throw Error(ErrorKind::Structural, "head matrix in layer " + std::to_string(l + 1) +
                                               " is not " + std::to_string(t.tokens_) + "x" +
                                               std::to_string(t.tokens_));
      t.store_.push_back(std::move(m));
    }
  }
  return t;
}

AttentionTensor AttentionTensor::compact(std::vector<std::vector<std::vector<double>>> rows) {
  if (rows.empty() || rows.front().empty())
    throw Error(ErrorKind::Structural, "attention tensor needs at least one layer and one head");
  AttentionTensor t;
  t.layers_ = rows.size();
  t.heads_ = rows.front().size();
  t.tokens_ = rows.front().front().size();
  t.full_ = false;
  if (t.tokens_ == 0) throw Error(ErrorKind::Structural, "attention tensor has no tokens");
  t.store_.reserve(t.layers_ * t.heads_);
  for (std::size_t l = 0; l < rows.size(); ++l) {
    if (rows[l].size() != t.heads_)
      throw Error(ErrorKind::Structural, "layer " + std::to_string(l + 1) + " has " +
                                             std::to_string(rows[l].size()) + " heads, expected " +
                                             std::to_string(t.heads_));
    for (const auto& r : rows[l]) {
      if (r.size() != t.tokens_)
        throw Error(ErrorKind::Structural, "last row in layer " + std::to_string(l + 1) +
                                               " has length " + std::to_string(r.size()) +
                                               ", expected " + std::to_string(t.tokens_));
      Matrix m(1, t.tokens_);
      std::copy(r.begin(), r.end(), m.row(0).begin());
      t.store_.push_back(std::move(m));
    }
  }
  return t;
}

const Matrix& AttentionTensor::matrix(std::size_t layer, std::size_t head) const {
  if (!full_) throw Error(ErrorKind::Structural, "compact attention tensor has no full matrices");
  if (layer >= layers_ || head >= heads_)
    throw Error(ErrorKind::Structural, "attention index out of range");
  return store_[layer * heads_ + head];
}

std::span<const Matrix> AttentionTensor::layer(std::size_t layer) const {
  if (!full_) throw Error(ErrorKind::Structural, "compact attention tensor has no full matrices");
  if (layer >= layers_) throw Error(ErrorKind::Structural, "layer index out of range");
  return {store_.data() + layer * heads_, heads_};
}

std::span<const double> AttentionTensor::last_row(std::size_t layer, std::size_t head) const {
  if (layer >= layers_ || head >= heads_)
    throw Error(ErrorKind::Structural, "attention index out of range");
  const Matrix& m = store_[layer * heads_ + head];
  return m.row(m.rows() - 1);
}

AttentionTensor AttentionTensor::to_compact() const {
  if (!full_) return *this;
  AttentionTensor t;
  t.layers_ = layers_;
  t.heads_ = heads_;
  t.tokens_ = tokens_;
  t.full_ = false;
  t.store_.reserve(store_.size());
  for (const auto& m : store_) {
    Matrix r(1, tokens_);
    auto last = m.row(tokens_ - 1);
    std::copy(last.begin(), last.end(), r.row(0).begin());
    t.store_.push_back(std::move(r));
  }
  return t;
}

void AttentionTensor::validate(double row_tol, double causal_tol) const {
  if (layers_ == 0 || heads_ == 0 || tokens_ == 0)
    throw Error(ErrorKind::Validation, "empty attention tensor");
  for (std::size_t l = 0; l < layers_; ++l) {
    for (std::size_t h = 0; h < heads_; ++h) {
      const Matrix& m = store_[l * heads_ + h];
      // A compact row belongs to query position M, so every column is causal.
      const std::size_t first_row = full_ ? 0 : tokens_ - 1;
      for (std::size_t r = 0; r < m.rows(); ++r) {
        const std::size_t i = first_row + r;
        double sum = 0.0;
        for (std::size_t j = 0; j < tokens_; ++j) {
          const double v = m(r, j);
          if (!std::isfinite(v) || v < -causal_tol)
            throw Error(ErrorKind::Validation, "negative or non-finite attention at layer " +
                                                   std::to_string(l + 1) + " head " +
                                                   std::to_string(h + 1));
          if (j > i && std::abs(v) > causal_tol)
            throw Error(ErrorKind::Validation, "non-causal attention at layer " +
                                                   std::to_string(l + 1) + " head " +
                                                   std::to_string(h + 1) + " row " +
                                                   std::to_string(i + 1));
          sum += v;
        }
        if (std::abs(sum - 1.0) > row_tol)
          throw Error(ErrorKind::Validation, "attention row " + std::to_string(i + 1) +
                                                 " at layer " + std::to_string(l + 1) + " head " +
                                                 std::to_string(h + 1) + " sums to " +
                                                 std::to_string(sum));
      }
    }
  }
}

Matrix aggregate_heads(std::span<const Matrix> heads) {
  if (heads.empty()) throw Error(ErrorKind::Structural, "no head matrices to aggregate");
  const std::size_t rows = heads.front().rows();
  const std::size_t cols = heads.front().cols();
  Matrix out(rows, cols);
  for (const auto& h : heads) {
    if (h.rows() != rows || h.cols() != cols)
      throw Error(ErrorKind::Structural, "head matrices differ in shape");
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) out(i, j) += h(i, j);
  }
  return out;
}

std::vector<double> last_token_contributions(const Matrix& aggregated) {
  if (aggregated.empty()) throw Error(ErrorKind::Structural, "empty attention matrix");
  auto last = aggregated.row(aggregated.rows() - 1);
  return {last.begin(), last.end()};
}

std::size_t strategy_layer(LayerStrategy strategy, std::size_t layer_count) {
  if (layer_count == 0) throw Error(ErrorKind::Structural, "attention tensor has no layers");
  switch (strategy) {
    case LayerStrategy::First: return 0;
    case LayerStrategy::Mid: return std::max<std::size_t>(layer_count / 2, 1) - 1;
    case LayerStrategy::Last: return layer_count - 1;
    case LayerStrategy::Max:
    case LayerStrategy::Mean: break;
  }
  throw Error(ErrorKind::Configuration,
              "strategy '" + std::string(to_string(strategy)) + "' spans all layers");
}

namespace {

std::vector<double> layer_contribution(const AttentionTensor& tensor, std::size_t layer) {
  if (tensor.has_full_matrices()) return last_token_contributions(aggregate_heads(tensor.layer(layer)));
  // Compact form: summing final rows equals the final row of the summed matrix.
  std::vector<double> out(tensor.token_count(), 0.0);
  for (std::size_t h = 0; h < tensor.head_count(); ++h) {
    auto row = tensor.last_row(layer, h);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += row[j];
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> per_layer_contributions(const AttentionTensor& tensor) {
  std::vector<std::vector<double>> out;
  out.reserve(tensor.layer_count());
  for (std::size_t l = 0; l < tensor.layer_count(); ++l) out.push_back(layer_contribution(tensor, l));
  return out;
}

ContributionVector contribution_scores(const AttentionTensor& tensor, LayerStrategy strategy) {
  const std::size_t L = tensor.layer_count();
  if (L == 0) throw Error(ErrorKind::Structural, "attention tensor has no layers");
  ContributionVector cv;
  cv.strategy = strategy;
  cv.layer_count = L;
  switch (strategy) {
    case LayerStrategy::First:
    case LayerStrategy::Mid:
    case LayerStrategy::Last:
      cv.scores = layer_contribution(tensor, strategy_layer(strategy, L));
      break;
    case LayerStrategy::Max: {
      cv.scores = layer_contribution(tensor, 0);
      for (std::size_t l = 1; l < L; ++l) {
        auto v = layer_contribution(tensor, l);
        for (std::size_t j = 0; j < v.size(); ++j) cv.scores[j] = std::max(cv.scores[j], v[j]);
      }
      break;
    }
    case LayerStrategy::Mean: {
      cv.scores.assign(tensor.token_count(), 0.0);
      for (std::size_t l = 0; l < L; ++l) {
        auto v = layer_contribution(tensor, l);
        for (std::size_t j = 0; j < v.size(); ++j) cv.scores[j] += v[j];
      }
      for (auto& s : cv.scores) s /= static_cast<double>(L);
      break;
    }
  }
  return cv;
}

nlohmann::json attention_to_json(const AttentionTensor& tensor, bool compact) {
  nlohmann::json j;
  j["L"] = tensor.layer_count();
  j["H"] = tensor.head_count();
  j["M"] = tensor.token_count();
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < tensor.layer_count(); ++l) {
    nlohmann::json heads = nlohmann::json::array();
    for (std::size_t h = 0; h < tensor.head_count(); ++h) {
      if (compact || !tensor.has_full_matrices()) {
        auto row = tensor.last_row(l, h);
        heads.push_back(std::vector<double>(row.begin(), row.end()));
      } else {
        const Matrix& m = tensor.matrix(l, h);
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < m.rows(); ++i) {
          auto row = m.row(i);
          rows.push_back(std::vector<double>(row.begin(), row.end()));
        }
        heads.push_back(std::move(rows));
      }
    }
    layers.push_back(std::move(heads));
  }
  j[(compact || !tensor.has_full_matrices()) ? "last_rows" : "layers"] = std::move(layers);
  return j;
}

AttentionTensor attention_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw Error(ErrorKind::Parse, "attention payload is not an object");
    const auto L = j.at("L").get<std::size_t>();
    const auto H = j.at("H").get<std::size_t>();
    const auto M = j.at("M").get<std::size_t>();
    AttentionTensor t;
    if (j.contains("layers")) {
      std::vector<std::vector<Matrix>> heads;
      for (const auto& layer : j.at("layers")) {
        auto& out = heads.emplace_back();
        for (const auto& head : layer) {
          Matrix m(head.size(), head.empty() ? 0 : head.front().size());
          for (std::size_t i = 0; i < head.size(); ++i) {
            if (head[i].size() != m.cols())
              throw Error(ErrorKind::Parse, "ragged attention matrix");
            for (std::size_t c = 0; c < m.cols(); ++c) m(i, c) = head[i][c].get<double>();
          }
          out.push_back(std::move(m));
        }
      }
      t = AttentionTensor::full(std::move(heads));
    } else if (j.contains("last_rows")) {
      t = AttentionTensor::compact(
          j.at("last_rows").get<std::vector<std::vector<std::vector<double>>>>());
    } else {
      throw Error(ErrorKind::Parse, "attention payload has neither 'layers' nor 'last_rows'");
    }
    if (t.layer_count() != L || t.head_count() != H || t.token_count() != M)
      throw Error(ErrorKind::Parse, "attention payload dimensions disagree with L/H/M header");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed attention payload: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Structural) throw Error(ErrorKind::Parse, e.what());
    throw;
  }
}

}  // namespace agser
