#include "agser/backend.hpp"

#include <algorithm>
#include <cctype>

#include "agser/error.hpp"
#include "agser/reference_model.hpp"
#include "agser/remote_backend.hpp"
#include "agser/scripted_backend.hpp"

namespace agser {

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::Reference: return "reference";
    case BackendKind::Scripted: return "scripted";
    case BackendKind::Remote: return "remote";
  }
  return "unknown";
}

BackendKind parse_backend_kind(std::string_view name) {
  if (name == "reference") return BackendKind::Reference;
  if (name == "scripted") return BackendKind::Scripted;
  if (name == "remote") return BackendKind::Remote;
  throw Error(ErrorKind::Configuration, "unknown backend '" + std::string(name) +
                                            "' (expected reference|scripted|remote)");
}

void BackendConfig::validate() const {
  if (max_new_tokens < 1) throw Error(ErrorKind::Configuration, "max_new_tokens must be positive");
  if (endpoint && kind != BackendKind::Remote)
    throw Error(ErrorKind::Configuration, "an endpoint is only valid for the remote backend");
  if (kind == BackendKind::Remote && (!endpoint || endpoint->empty()))
    throw Error(ErrorKind::Configuration, "the remote backend needs an endpoint");
  if (script_path && kind != BackendKind::Scripted)
    throw Error(ErrorKind::Configuration, "a script is only valid for the scripted backend");
  if (weights_path && kind != BackendKind::Reference)
    throw Error(ErrorKind::Configuration, "a weights file is only valid for the reference backend");
}

TokenSequence GenerationResult::question_tokens() const {
  const std::size_t n = question_span.size();
  if (n && (question_span.start < 1 || question_span.end > prompt_tokens.size()))
    throw Error(ErrorKind::Structural, "question span outside the prompt tokens");
  std::vector<std::string> toks(prompt_tokens.tokens.begin() + static_cast<std::ptrdiff_t>(question_span.start - 1),
                                prompt_tokens.tokens.begin() + static_cast<std::ptrdiff_t>(question_span.start - 1 + n));
  return TokenSequence::from_tokens(std::move(toks));
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  config.validate();
  switch (config.kind) {
    case BackendKind::Reference: {
      auto weights = config.weights_path ? ModelWeights::load(*config.weights_path)
                                         : ModelWeights::generate(kReferenceWeightSeed);
      return std::make_unique<ReferenceBackend>(std::move(weights), config.seed, config.max_new_tokens);
    }
    case BackendKind::Scripted:
      return std::make_unique<ScriptedBackend>(config.script_path ? ScriptTable::load(*config.script_path)
                                                                  : ScriptTable{});
    case BackendKind::Remote:
      return std::make_unique<RemoteBackend>(*config.endpoint, config.seed, config.max_new_tokens);
  }
  throw Error(ErrorKind::Configuration, "unknown backend kind");
}

std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace agser
