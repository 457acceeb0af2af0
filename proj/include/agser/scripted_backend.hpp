#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "agser/backend.hpp"

namespace agser {

/// Synthetic last-row attention: uniform, or extra mass on chosen question
/// positions (1-based, relative to the question span).
struct AttentionPattern {
  std::vector<std::size_t> peaked;  // empty means uniform

  static AttentionPattern parse(std::string_view text);  // "uniform" | "peaked:[1,4,5]"
  std::string str() const;
  bool operator==(const AttentionPattern&) const = default;
};

struct ScriptEntry {
  std::string match;
  std::string answer;
  AttentionPattern pattern;
  std::vector<std::string> variants;  // per-seed answers for sampled generation
};

/// Lookup table behind the scripted backend. Keys are compared after
/// whitespace normalization, first against the whole prompt, then against the
/// question text alone. The first matching entry wins.
class ScriptTable {
 public:
  ScriptTable() = default;
  explicit ScriptTable(std::vector<ScriptEntry> entries);

  static ScriptTable from_json(const nlohmann::json& j);
  static ScriptTable load(const std::string& path);
  nlohmann::json to_json() const;

  const ScriptEntry* lookup(std::string_view prompt, std::string_view question) const;
  const std::vector<ScriptEntry>& entries() const noexcept { return entries_; }

  static constexpr std::string_view kDefaultAnswer = "I don't know.";

 private:
  std::vector<ScriptEntry> entries_;
  std::vector<std::string> keys_;
};

/// Collapses whitespace runs to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

/// Word-level test double. Prompt tokens are whitespace-delimited words; the
/// captured tensor has the same synthetic pattern in every layer and head.
class ScriptedBackend final : public Backend {
 public:
  static constexpr std::size_t kLayers = 4;
  static constexpr std::size_t kHeads = 2;
  static constexpr double kPeakWeight = 9.0;

  explicit ScriptedBackend(ScriptTable table) : table_(std::move(table)) {}

  GenerationResult generate(const RenderedPrompt& prompt,
                            const SamplingOptions& options = {}) const override;
  bool supports_seeded_variation() const override { return true; }
  std::string_view name() const override { return "scripted"; }

  const ScriptTable& table() const noexcept { return table_; }

 private:
  ScriptTable table_;
};

AttentionTensor scripted_attention(std::size_t token_count, TokenSpan question,
                                   const AttentionPattern& pattern);

}  // namespace agser
