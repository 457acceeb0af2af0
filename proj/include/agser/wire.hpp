#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "agser/backend.hpp"

namespace agser {

/// Body of POST /generate. `question_bytes` and `sample` are optional
/// extensions; servers that ignore them treat the whole prompt as the question
/// source and decode greedily.
struct GenerateRequest {
  RenderedPrompt prompt;
  int max_new_tokens = 24;
  std::uint64_t seed = 42;
  bool sample = false;
};

nlohmann::json request_to_json(const GenerateRequest& request);
GenerateRequest request_from_json(const nlohmann::json& j);

/// Response body: the attention interchange object (compact "last_rows" by
/// default) merged with answer, prompt_tokens, question_span and the optional
/// answer_tokens, token_separator and unscripted fields.
nlohmann::json result_to_json(const GenerationResult& result, bool compact = true);
GenerationResult result_from_json(const nlohmann::json& j);

/// JSON text safe for arbitrary bytes (invalid UTF-8 is replaced).
std::string dump_json(const nlohmann::json& j, int indent = -1);

}  // namespace agser
