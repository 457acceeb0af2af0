#include "agser/pipeline.hpp"

namespace agser {

std::string_view to_string(Pass pass) {
  switch (pass) {
    case Pass::Original: return "original";
    case Pass::Attentive: return "attentive";
    case Pass::NonAttentive: return "non-attentive";
  }
  return "unknown";
}

PassError::PassError(Pass pass, const Error& cause)
    : Error(cause.kind(), std::string(to_string(pass)) + " pass: " + cause.what(), cause.retriable()),
      pass_(pass) {}

bool DetectionRecord::operator==(const DetectionRecord& o) const {
  return query == o.query && original_answer == o.original_answer &&
         attentive_answer == o.attentive_answer && non_attentive_answer == o.non_attentive_answer &&
         split == o.split && question_scores == o.question_scores && pair.r_att == o.pair.r_att &&
         pair.r_non_att == o.pair.r_non_att && score.r == o.score.r && score.lambda == o.score.lambda &&
         strategy == o.strategy && pass_count == o.pass_count;
}

namespace {

GenerationResult run_pass(Pass pass, const Backend& backend, const RenderedPrompt& prompt) {
  try {
    return backend.generate(prompt);
  } catch (const PassError&) {
    throw;
  } catch (const Error& e) {
    throw PassError(pass, e);
  }
}

}  // namespace

QueryAnalysis analyze_query(std::string_view query, const PipelineConfig& config,
                            const Backend& backend) {
  QueryAnalysis a;
  a.prompt = render_prompt(config.prompt_template, query);
  a.original = run_pass(Pass::Original, backend, a.prompt);
  a.contributions = contribution_scores(a.original.attention, config.strategy);
  a.question = a.original.question_tokens();
  if (a.question.size() < 2)
    throw Error(ErrorKind::DegenerateInput,
                "the question has " + std::to_string(a.question.size()) +
                    " token(s); at least 2 are needed to split it");
  const auto first = a.contributions.scores.begin() +
                     static_cast<std::ptrdiff_t>(a.original.question_span.start - 1);
  a.question_scores.assign(first, first + static_cast<std::ptrdiff_t>(a.question.size()));
  a.split = split_query(a.question, a.question_scores, config.k);
  return a;
}

DetectionRecord detect(std::string_view query, const PipelineConfig& config, const Backend& backend) {
  if (!(config.lambda > 0.0)) throw Error(ErrorKind::Configuration, "lambda must be positive");
  QueryAnalysis a = analyze_query(query, config, backend);
  const std::string& sep = a.original.token_separator;

  const auto attentive = run_pass(Pass::Attentive, backend,
                                  render_subquery(a.split.attentive, config.prompt_template, sep));
  const auto non_attentive = run_pass(Pass::NonAttentive, backend,
                                      render_subquery(a.split.non_attentive, config.prompt_template, sep));

  DetectionRecord r;
  r.query = std::string(query);
  r.original_answer = a.original.answer_text;
  r.attentive_answer = attentive.answer_text;
  r.non_attentive_answer = non_attentive.answer_text;
  r.split = std::move(a.split);
  r.question_scores = std::move(a.question_scores);
  r.pair.r_att = rouge_l(r.attentive_answer, r.original_answer);
  r.pair.r_non_att = rouge_l(r.non_attentive_answer, r.original_answer);
  r.score = hallucination_score(r.pair, config.lambda);
  r.strategy = config.strategy;
  r.pass_count = 3;
  return r;
}

nlohmann::json record_to_json(const DetectionRecord& record) {
  auto side = [](const TokenSequence& s) {
    return nlohmann::json{{"tokens", s.tokens}, {"positions", s.positions}};
  };
  nlohmann::json j;
  j["query"] = record.query;
  j["original_answer"] = record.original_answer;
  j["attentive_answer"] = record.attentive_answer;
  j["non_attentive_answer"] = record.non_attentive_answer;
  j["split"] = {{"attentive", side(record.split.attentive)},
                {"non_attentive", side(record.split.non_attentive)},
                {"k", record.split.k.str()},
                {"m_attentive", record.split.m_attentive}};
  j["question_scores"] = record.question_scores;
  j["r_att"] = record.pair.r_att;
  j["r_non_att"] = record.pair.r_non_att;
  j["r"] = record.score.r;
  j["lambda"] = record.score.lambda;
  j["strategy"] = to_string(record.strategy);
  j["pass_count"] = record.pass_count;
  return j;
}

}  // namespace agser
