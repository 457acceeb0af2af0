#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "agser/attention.hpp"
#include "agser/backend.hpp"

namespace agser {

struct ModelShape {
  std::size_t layers = 4;
  std::size_t heads = 2;
  std::size_t width = 32;
  std::size_t head_width = 16;
  std::size_t mlp_width = 64;
  std::size_t vocab = 256;
  std::size_t context = 512;

  bool operator==(const ModelShape&) const = default;
};

struct LayerWeights {
  Matrix query;   // width x width, head h owns columns [h*d_h, (h+1)*d_h)
  Matrix key;     // width x width
  Matrix value;   // width x width
  Matrix output;  // width x width
  Matrix mlp_in;  // width x mlp_width
  Matrix mlp_out; // mlp_width x width

  bool operator==(const LayerWeights&) const = default;
};

/// Weights of the small byte-level decoder used as the reference backend.
struct ModelWeights {
  ModelShape shape;
  Matrix token_embedding;     // vocab x width
  Matrix position_embedding;  // context x width
  std::vector<LayerWeights> layers;
  Matrix unembedding;         // width x vocab

  /// Uniform(-sqrt(3/fan_in), sqrt(3/fan_in)) from a seeded mt19937_64.
  static ModelWeights generate(std::uint64_t seed, ModelShape shape = {});

  /// Binary asset: "AGSRW001", seven little-endian u64 shape fields, then all
  /// matrices as little-endian f64 in declaration order.
  static ModelWeights load(const std::string& path);
  void save(const std::string& path) const;

  bool operator==(const ModelWeights&) const = default;
};

inline constexpr std::uint64_t kReferenceWeightSeed = 42;

struct ForwardResult {
  std::vector<double> next_token_probs;  // softmax over the vocab after the last token
  AttentionTensor attention;             // full M x M per layer and head
  /// Pre-softmax scaled scores q.k/sqrt(d_h), same layout; entries above the
  /// diagonal are left at 0 and play no part in the softmax.
  std::vector<std::vector<Matrix>> attention_logits;
};

/// Causal prefill over `token_ids`. Throws Structural for ids outside the
/// vocab and Capacity when the input is longer than the context.
ForwardResult reference_forward(std::span<const int> token_ids, const ModelWeights& weights);

/// Byte-level tokenizer: one token per byte.
std::vector<int> byte_token_ids(std::string_view text);

/// Backend running ModelWeights with greedy (or seeded sampled) decoding.
/// Output is restricted to printable ASCII; a newline ends the answer.
class ReferenceBackend final : public Backend {
 public:
  ReferenceBackend(ModelWeights weights, std::uint64_t seed, int max_new_tokens);

  GenerationResult generate(const RenderedPrompt& prompt,
                            const SamplingOptions& options = {}) const override;
  bool supports_seeded_variation() const override { return true; }
  std::string_view name() const override { return "reference"; }

  const ModelWeights& weights() const noexcept { return weights_; }

 private:
  ModelWeights weights_;
  std::uint64_t seed_;
  int max_new_tokens_;
};

}  // namespace agser
