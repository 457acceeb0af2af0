#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agser/attention.hpp"
#include "agser/split.hpp"

namespace agser {

enum class BackendKind { Reference, Scripted, Remote };

std::string_view to_string(BackendKind kind);
BackendKind parse_backend_kind(std::string_view name);

struct BackendConfig {
  BackendKind kind = BackendKind::Scripted;
  std::uint64_t seed = 42;
  int max_new_tokens = 24;
  std::optional<std::string> endpoint;     // Remote only
  std::optional<std::string> script_path;  // Scripted only; absent means an empty script
  std::optional<std::string> weights_path; // Reference only; absent means regenerated from seed

  void validate() const;
};

/// 1-based inclusive token range; end == start - 1 when empty.
struct TokenSpan {
  std::size_t start = 1;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end + 1 > start ? end + 1 - start : 0; }
  bool operator==(const TokenSpan&) const = default;
};

struct GenerationResult {
  std::string answer_text;
  TokenSequence answer_tokens;
  TokenSequence prompt_tokens;
  AttentionTensor attention;  // prefill over prompt_tokens
  TokenSpan question_span;
  std::string token_separator = " ";  // how prompt tokens re-join into text
  bool unscripted = false;            // scripted fallback answer

  /// The question tokens, positions relative to the question (1..n).
  TokenSequence question_tokens() const;

  bool operator==(const GenerationResult&) const = default;
};

struct SamplingOptions {
  bool sample = false;                // false: greedy
  std::optional<std::uint64_t> seed;  // overrides BackendConfig::seed
};

/// Answer generation with prefill attention capture.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual GenerationResult generate(const RenderedPrompt& prompt,
                                    const SamplingOptions& options = {}) const = 0;
  /// True when sampled generations differ by seed.
  virtual bool supports_seeded_variation() const = 0;
  virtual std::string_view name() const = 0;
};

std::unique_ptr<Backend> make_backend(const BackendConfig& config);

/// Splits on ASCII whitespace.
std::vector<std::string> whitespace_tokens(std::string_view text);

}  // namespace agser
