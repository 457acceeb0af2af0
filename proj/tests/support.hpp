#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "agser/attention.hpp"
#include "agser/backend.hpp"

namespace testing {

// Random causal, row-stochastic head matrix.
inline agser::Matrix random_attention(std::size_t m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  agser::Matrix a(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j <= i; ++j) sum += a(i, j) = u(rng);
    for (std::size_t j = 0; j <= i; ++j) a(i, j) /= sum;
  }
  return a;
}

inline agser::AttentionTensor random_tensor(std::size_t layers, std::size_t heads, std::size_t m,
                                            std::mt19937_64& rng) {
  std::vector<std::vector<agser::Matrix>> t(layers);
  for (auto& layer : t)
    for (std::size_t h = 0; h < heads; ++h) layer.push_back(random_attention(m, rng));
  return agser::AttentionTensor::full(std::move(t));
}

// Wraps a backend and counts generate calls.
class CountingBackend final : public agser::Backend {
 public:
  explicit CountingBackend(const agser::Backend& inner) : inner_(inner) {}

  agser::GenerationResult generate(const agser::RenderedPrompt& prompt,
                                   const agser::SamplingOptions& options = {}) const override {
    ++calls;
    prompts.push_back(prompt);
    return inner_.generate(prompt, options);
  }
  bool supports_seeded_variation() const override { return inner_.supports_seeded_variation(); }
  std::string_view name() const override { return "counting"; }

  mutable int calls = 0;
  mutable std::vector<agser::RenderedPrompt> prompts;

 private:
  const agser::Backend& inner_;
};

inline std::string source_path(const std::string& rel) { return std::string(AGSER_SOURCE_DIR) + "/" + rel; }

}  // namespace testing
