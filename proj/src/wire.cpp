#include "agser/wire.hpp"

#include "agser/error.hpp"

namespace agser {

nlohmann::json request_to_json(const GenerateRequest& request) {
  nlohmann::json j;
  j["prompt"] = request.prompt.text;
  j["max_new_tokens"] = request.max_new_tokens;
  j["seed"] = request.seed;
  j["question_bytes"] = {request.prompt.question_begin, request.prompt.question_end};
  if (request.sample) j["sample"] = true;
  return j;
}

GenerateRequest request_from_json(const nlohmann::json& j) {
  try {
    GenerateRequest r;
    r.prompt.text = j.at("prompt").get<std::string>();
    r.max_new_tokens = j.value("max_new_tokens", 24);
    r.seed = j.value("seed", std::uint64_t{42});
    r.sample = j.value("sample", false);
    if (j.contains("question_bytes")) {
      const auto& qb = j.at("question_bytes");
      if (!qb.is_array() || qb.size() != 2) throw Error(ErrorKind::Parse, "question_bytes must be [begin, end]");
      r.prompt.question_begin = qb[0].get<std::size_t>();
      r.prompt.question_end = qb[1].get<std::size_t>();
    } else {
      r.prompt.question_begin = 0;
      r.prompt.question_end = r.prompt.text.size();
    }
    if (r.prompt.question_begin > r.prompt.question_end || r.prompt.question_end > r.prompt.text.size())
      throw Error(ErrorKind::Parse, "question_bytes outside the prompt");
    if (r.max_new_tokens < 1) throw Error(ErrorKind::Parse, "max_new_tokens must be positive");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed generate request: ") + e.what());
  }
}

nlohmann::json result_to_json(const GenerationResult& result, bool compact) {
  nlohmann::json j = attention_to_json(result.attention, compact);
  j["answer"] = result.answer_text;
  j["answer_tokens"] = result.answer_tokens.tokens;
  j["prompt_tokens"] = result.prompt_tokens.tokens;
  j["question_span"] = {result.question_span.start, result.question_span.end};
  j["token_separator"] = result.token_separator;
  if (result.unscripted) j["unscripted"] = true;
  return j;
}

GenerationResult result_from_json(const nlohmann::json& j) {
  try {
    GenerationResult r;
    r.attention = attention_from_json(j);
    r.answer_text = j.at("answer").get<std::string>();
    r.prompt_tokens = TokenSequence::from_tokens(j.at("prompt_tokens").get<std::vector<std::string>>());
    if (j.contains("answer_tokens"))
      r.answer_tokens = TokenSequence::from_tokens(j.at("answer_tokens").get<std::vector<std::string>>());
    else
      r.answer_tokens = TokenSequence::from_tokens(whitespace_tokens(r.answer_text));
    const auto& span = j.at("question_span");
    if (!span.is_array() || span.size() != 2)
      throw Error(ErrorKind::Parse, "question_span must be [start, end]");
    r.question_span = {span[0].get<std::size_t>(), span[1].get<std::size_t>()};
    r.token_separator = j.value("token_separator", std::string(" "));
    r.unscripted = j.value("unscripted", false);
    if (r.attention.token_count() != r.prompt_tokens.size())
      throw Error(ErrorKind::Parse, "attention covers " + std::to_string(r.attention.token_count()) +
                                        " tokens but prompt_tokens has " +
                                        std::to_string(r.prompt_tokens.size()));
    if (r.question_span.start < 1 || r.question_span.end > r.prompt_tokens.size() ||
        r.question_span.end + 1 < r.question_span.start)
      throw Error(ErrorKind::Parse, "question_span outside the prompt tokens");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed generation result: ") + e.what());
  }
}

std::string dump_json(const nlohmann::json& j, int indent) {
  return j.dump(indent, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace agser
