#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "agser/attention.hpp"
#include "agser/backend.hpp"
#include "agser/consistency.hpp"
#include "agser/error.hpp"
#include "agser/fraction.hpp"
#include "agser/split.hpp"

namespace agser {

struct PipelineConfig {
  Fraction k{2, 3};
  double lambda = 1.0;
  LayerStrategy strategy = LayerStrategy::Mean;
  BackendConfig backend;
  PromptTemplate prompt_template = PromptTemplate::chatbot();
};

enum class Pass { Original, Attentive, NonAttentive };
std::string_view to_string(Pass pass);

/// A backend failure tagged with the generation pass it happened in.
class PassError : public Error {
 public:
  PassError(Pass pass, const Error& cause);
  Pass pass() const noexcept { return pass_; }

 private:
  Pass pass_;
};

/// Output of the first generation pass and the split derived from it.
struct QueryAnalysis {
  RenderedPrompt prompt;
  GenerationResult original;
  ContributionVector contributions;  // over every prompt token
  TokenSequence question;            // question tokens, positions 1..n
  std::vector<double> question_scores;
  QuerySplit split;
};

struct DetectionRecord {
  std::string query;
  std::string original_answer;
  std::string attentive_answer;
  std::string non_attentive_answer;
  QuerySplit split;
  std::vector<double> question_scores;
  ConsistencyPair pair;
  DetectionScore score;
  LayerStrategy strategy = LayerStrategy::Mean;
  int pass_count = 0;

  bool operator==(const DetectionRecord& o) const;
};

/// Generates the original answer and splits the question by contribution.
/// One generate call.
QueryAnalysis analyze_query(std::string_view query, const PipelineConfig& config,
                            const Backend& backend);

/// Full detection for one query: original, attentive and non-attentive passes
/// (exactly three generate calls), Rouge-L consistency of each against the
/// original answer, and r = lambda * r_att - r_non_att.
DetectionRecord detect(std::string_view query, const PipelineConfig& config, const Backend& backend);

nlohmann::json record_to_json(const DetectionRecord& record);

}  // namespace agser
