#include "agser/scripted_backend.hpp"

#include <cctype>
#include <charconv>
#include <fstream>

#include "agser/error.hpp"

namespace agser {

AttentionPattern AttentionPattern::parse(std::string_view text) {
  if (text == "uniform") return {};
  constexpr std::string_view kPrefix = "peaked:";
  if (text.substr(0, kPrefix.size()) != kPrefix || text.size() < kPrefix.size() + 2 ||
      text[kPrefix.size()] != '[' || text.back() != ']')
    throw Error(ErrorKind::Configuration,
                "attention_pattern must be \"uniform\" or \"peaked:[...]\", got '" +
                    std::string(text) + "'");
  std::string_view body = text.substr(kPrefix.size() + 1, text.size() - kPrefix.size() - 2);
  AttentionPattern p;
  while (!body.empty()) {
    while (!body.empty() && (body.front() == ' ' || body.front() == ',')) body.remove_prefix(1);
    if (body.empty()) break;
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
    if (ec != std::errc() || v == 0)
      throw Error(ErrorKind::Configuration,
                  "bad position list in attention_pattern '" + std::string(text) + "'");
    p.peaked.push_back(v);
    body.remove_prefix(static_cast<std::size_t>(ptr - body.data()));
  }
  if (p.peaked.empty())
    throw Error(ErrorKind::Configuration, "peaked attention_pattern needs at least one position");
  return p;
}

std::string AttentionPattern::str() const {
  if (peaked.empty()) return "uniform";
  std::string s = "peaked:[";
  for (std::size_t i = 0; i < peaked.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(peaked[i]);
  }
  return s + "]";
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

ScriptTable::ScriptTable(std::vector<ScriptEntry> entries) : entries_(std::move(entries)) {
  keys_.reserve(entries_.size());
  for (const auto& e : entries_) keys_.push_back(normalize_whitespace(e.match));
}

ScriptTable ScriptTable::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorKind::Configuration, "script must be a JSON array");
  std::vector<ScriptEntry> entries;
  entries.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& item = j[i];
    try {
      ScriptEntry e;
      e.match = item.at("match").get<std::string>();
      e.answer = item.at("answer").get<std::string>();
      e.pattern = AttentionPattern::parse(item.value("attention_pattern", std::string("uniform")));
      if (item.contains("variants")) e.variants = item.at("variants").get<std::vector<std::string>>();
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::Configuration,
                  "script entry " + std::to_string(i) + " is malformed: " + ex.what());
    }
  }
  return ScriptTable(std::move(entries));
}

ScriptTable ScriptTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Configuration, "cannot open script file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::Configuration, "script file '" + path + "' is not valid JSON: " + ex.what());
  }
  return from_json(j);
}

nlohmann::json ScriptTable::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : entries_) {
    nlohmann::json o;
    o["match"] = e.match;
    o["answer"] = e.answer;
    o["attention_pattern"] = e.pattern.str();
    if (!e.variants.empty()) o["variants"] = e.variants;
    j.push_back(std::move(o));
  }
  return j;
}

const ScriptEntry* ScriptTable::lookup(std::string_view prompt, std::string_view question) const {
  const std::string p = normalize_whitespace(prompt);
  for (std::size_t i = 0; i < keys_.size(); ++i)
    if (keys_[i] == p) return &entries_[i];
  const std::string q = normalize_whitespace(question);
  for (std::size_t i = 0; i < keys_.size(); ++i)
    if (keys_[i] == q) return &entries_[i];
  return nullptr;
}

AttentionTensor scripted_attention(std::size_t token_count, TokenSpan question,
                                   const AttentionPattern& pattern) {
  if (token_count == 0) throw Error(ErrorKind::Structural, "scripted attention needs tokens");
  Matrix head(token_count, token_count);
  for (std::size_t i = 0; i + 1 < token_count; ++i)
    for (std::size_t j = 0; j <= i; ++j) head(i, j) = 1.0 / static_cast<double>(i + 1);

  std::vector<double> weights(token_count, 1.0);
  for (std::size_t p : pattern.peaked)
    if (p >= 1 && p <= question.size()) weights[question.start + p - 2] = ScriptedBackend::kPeakWeight;
  double total = 0.0;
  for (double w : weights) total += w;
  for (std::size_t j = 0; j < token_count; ++j) head(token_count - 1, j) = weights[j] / total;

  return AttentionTensor::full(
      std::vector<std::vector<Matrix>>(ScriptedBackend::kLayers,
                                       std::vector<Matrix>(ScriptedBackend::kHeads, head)));
}

GenerationResult ScriptedBackend::generate(const RenderedPrompt& prompt,
                                           const SamplingOptions& options) const {
  if (prompt.question_end > prompt.text.size() || prompt.question_begin > prompt.question_end)
    throw Error(ErrorKind::Structural, "question range outside the prompt");
  const std::string_view text(prompt.text);
  auto before = whitespace_tokens(text.substr(0, prompt.question_begin));
  auto question = whitespace_tokens(prompt.question());
  auto after = whitespace_tokens(text.substr(prompt.question_end));

  GenerationResult r;
  std::vector<std::string> tokens;
  tokens.reserve(before.size() + question.size() + after.size());
  tokens.insert(tokens.end(), before.begin(), before.end());
  tokens.insert(tokens.end(), question.begin(), question.end());
  tokens.insert(tokens.end(), after.begin(), after.end());
  if (tokens.empty()) throw Error(ErrorKind::Validation, "empty prompt");
  r.question_span = {before.size() + 1, before.size() + question.size()};
  r.prompt_tokens = TokenSequence::from_tokens(std::move(tokens));

  const ScriptEntry* entry = table_.lookup(prompt.text, prompt.question());
  AttentionPattern pattern;
  if (entry) {
    pattern = entry->pattern;
    if (options.sample && !entry->variants.empty()) {
      const std::uint64_t seed = options.seed.value_or(0);
      r.answer_text = entry->variants[seed % entry->variants.size()];
    } else {
      r.answer_text = entry->answer;
    }
  } else {
    r.answer_text = std::string(ScriptTable::kDefaultAnswer);
    r.unscripted = true;
  }
  r.answer_tokens = TokenSequence::from_tokens(whitespace_tokens(r.answer_text));
  r.attention = scripted_attention(r.prompt_tokens.size(), r.question_span, pattern);
  r.token_separator = " ";
  return r;
}

}  // namespace agser
