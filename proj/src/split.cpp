#include "agser/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "agser/error.hpp"

namespace agser {

TokenSequence TokenSequence::from_tokens(std::vector<std::string> tokens) {
  TokenSequence seq;
  seq.positions.resize(tokens.size());
  std::iota(seq.positions.begin(), seq.positions.end(), std::size_t{1});
  seq.tokens = std::move(tokens);
  return seq;
}

std::string TokenSequence::join(std::string_view separator) const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += separator;
    out += tokens[i];
  }
  return out;
}

std::size_t attentive_count(std::size_t token_count, Fraction k) {
  if (token_count < 2)
    throw Error(ErrorKind::DegenerateInput,
                "a query needs at least 2 tokens to form attentive and non-attentive parts, got " +
                    std::to_string(token_count));
  if (k.num() <= 0 || k.num() >= k.den())
    throw Error(ErrorKind::Configuration, "k must lie strictly between 0 and 1, got " + k.str());
  const auto m = k.ceil_times(static_cast<std::int64_t>(token_count));
  return static_cast<std::size_t>(std::clamp<std::int64_t>(m, 1, static_cast<std::int64_t>(token_count) - 1));
}

QuerySplit split_query(const TokenSequence& tokens, std::span<const double> scores, Fraction k) {
  if (tokens.positions.size() != tokens.tokens.size())
    throw Error(ErrorKind::Structural, "token sequence has mismatched positions");
  if (tokens.size() != scores.size())
    throw Error(ErrorKind::Structural, "query has " + std::to_string(tokens.size()) +
                                           " tokens but " + std::to_string(scores.size()) +
                                           " contribution scores");
  for (double v : scores)
    if (!std::isfinite(v)) throw Error(ErrorKind::Validation, "contribution scores must be finite");
  const std::size_t M = tokens.size();
  const std::size_t m = attentive_count(M, k);

  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<bool> chosen(M, false);
  for (std::size_t i = 0; i < m; ++i) chosen[order[i]] = true;

  QuerySplit split;
  split.k = k;
  split.m_attentive = m;
  for (std::size_t i = 0; i < M; ++i) {
    TokenSequence& side = chosen[i] ? split.attentive : split.non_attentive;
    side.tokens.push_back(tokens.tokens[i]);
    side.positions.push_back(tokens.positions[i]);
  }
  return split;
}

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
  const auto first = text_.find(kPlaceholder);
  if (first == std::string::npos)
    throw Error(ErrorKind::Configuration, "prompt template has no {question} placeholder");
  if (text_.find(kPlaceholder, first + 1) != std::string::npos)
    throw Error(ErrorKind::Configuration, "prompt template has more than one {question} placeholder");
  slot_ = first;
}

PromptTemplate PromptTemplate::bare() { return PromptTemplate(std::string(kPlaceholder)); }

PromptTemplate PromptTemplate::chatbot() {
  return PromptTemplate(
      "You are a helpful intelligent chatbot to answer questions.\n"
      "Follow the format below, and please only predict the answer that corresponds to the last "
      "question.\n"
      "Question: {question}\n"
      "Answer:");
}

PromptTemplate PromptTemplate::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Configuration, "cannot open template file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  if (!text.empty() && text.back() == '\n') {
    text.pop_back();
    if (!text.empty() && text.back() == '\r') text.pop_back();
  }
  return PromptTemplate(std::move(text));
}

RenderedPrompt render_prompt(const PromptTemplate& tmpl, std::string_view question) {
  RenderedPrompt p;
  p.text.reserve(tmpl.text().size() + question.size());
  p.text += tmpl.prefix();
  p.question_begin = p.text.size();
  p.text += question;
  p.question_end = p.text.size();
  p.text += tmpl.suffix();
  return p;
}

RenderedPrompt render_subquery(const TokenSequence& part, const PromptTemplate& tmpl,
                               std::string_view separator) {
  return render_prompt(tmpl, part.join(separator));
}

}  // namespace agser
