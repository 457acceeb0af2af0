#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agser/fraction.hpp"

namespace agser {

/// Ordered tokens with their 1-based positions in the sequence they came from.
struct TokenSequence {
  std::vector<std::string> tokens;
  std::vector<std::size_t> positions;

  /// Positions 1..n.
  static TokenSequence from_tokens(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
  std::string join(std::string_view separator = " ") const;

  bool operator==(const TokenSequence&) const = default;
};

struct QuerySplit {
  TokenSequence attentive;
  TokenSequence non_attentive;
  Fraction k;
  std::size_t m_attentive = 0;

  bool operator==(const QuerySplit&) const = default;
};

/// Number of attentive tokens for a query of `token_count` tokens:
/// ceil(k * M) clamped to [1, M - 1].
std::size_t attentive_count(std::size_t token_count, Fraction k);

/// Picks the tokens with the highest contribution as the attentive query; the
/// rest form the non-attentive query. Equal scores favour the earlier token.
/// Both halves keep the original token order and positions.
QuerySplit split_query(const TokenSequence& tokens, std::span<const double> scores, Fraction k);

/// Template with a single `{question}` slot.
class PromptTemplate {
 public:
  static constexpr std::string_view kPlaceholder = "{question}";

  /// Throws Configuration unless the text has exactly one placeholder.
  explicit PromptTemplate(std::string text);

  /// Identity template, "{question}".
  static PromptTemplate bare();
  /// The chatbot question-answering template shipped in data/templates/chatbot.txt.
  static PromptTemplate chatbot();
  /// Reads a template file; one trailing newline is dropped.
  static PromptTemplate load(const std::string& path);

  const std::string& text() const noexcept { return text_; }
  std::string_view prefix() const noexcept { return std::string_view(text_).substr(0, slot_); }
  std::string_view suffix() const noexcept {
    return std::string_view(text_).substr(slot_ + kPlaceholder.size());
  }

 private:
  std::string text_;
  std::size_t slot_ = 0;
};

/// A rendered prompt and the byte range [question_begin, question_end) of the
/// question inside it.
struct RenderedPrompt {
  std::string text;
  std::size_t question_begin = 0;
  std::size_t question_end = 0;

  std::string_view question() const {
    return std::string_view(text).substr(question_begin, question_end - question_begin);
  }
  bool operator==(const RenderedPrompt&) const = default;
};

RenderedPrompt render_prompt(const PromptTemplate& tmpl, std::string_view question);

/// Fills the question slot with the joined tokens; the template text is kept as is.
RenderedPrompt render_subquery(const TokenSequence& part, const PromptTemplate& tmpl,
                               std::string_view separator = " ");

}  // namespace agser
