#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "agser/error.hpp"
#include "agser/pipeline.hpp"
#include "agser/reference_model.hpp"
#include "agser/scripted_backend.hpp"
#include "support.hpp"

using namespace agser;

namespace {

const char* kKing = "Who is the author of the book Dreamcatcher, what year was it published?";
const char* kMorford = "Who is the author of the book My Cat Spit McGee, what year was it published?";

ScriptTable book_script() {
  return ScriptTable::from_json(nlohmann::json::parse(R"([
    {"match": "Who is the author of the book Dreamcatcher, what year was it published?",
     "answer": "Stephen King, in 2001.", "attention_pattern": "peaked:[4,7,8,10,12,13]"},
    {"match": "author book Dreamcatcher, year it published?", "answer": "Stephen King, in 2001."},
    {"match": "Who is the of the what was", "answer": "The Shining."},
    {"match": "Who is the author of the book My Cat Spit McGee, what year was it published?",
     "answer": "Mark P. O. Morford, in 2002.", "attention_pattern": "peaked:[4,7,8,9,10,11,16]"},
    {"match": "author book My Cat Spit McGee, published?", "answer": "Willie Morris, in 1999."},
    {"match": "Who is the of the what year was it", "answer": "Mark P. O. Morford, in 2002."}
  ])"));
}

PipelineConfig config_with_k(const char* k) {
  PipelineConfig c;
  c.k = Fraction::parse(k);
  return c;
}

}  // namespace

TEST_CASE("non-hallucination shape: attentive answer repeats, non-attentive drifts") {
  ScriptedBackend backend(book_script());
  const auto r = detect(kKing, config_with_k("0.45"), backend);
  CHECK(r.original_answer == "Stephen King, in 2001.");
  CHECK(r.attentive_answer == "Stephen King, in 2001.");
  CHECK(r.pair.r_att == 1.0);
  CHECK(r.pair.r_non_att == 0.0);
  CHECK(r.score.r == 1.0);
  CHECK(r.pass_count == 3);
}

TEST_CASE("hallucination shape: non-attentive answer repeats the wrong answer") {
  ScriptedBackend backend(book_script());
  const auto r = detect(kMorford, config_with_k("0.4"), backend);
  CHECK(r.split.attentive.join() == "author book My Cat Spit McGee, published?");
  CHECK(r.split.non_attentive.join() == "Who is the of the what year was it");
  CHECK(r.pair.r_non_att == 1.0);
  // 4 candidate tokens, 6 reference tokens, LCS 1 ("in")
  CHECK(r.pair.r_att == doctest::Approx(0.2));
  CHECK(r.score.r == doctest::Approx(r.pair.r_att - 1.0));
}

TEST_CASE("exactly three generate calls and an exact token budget") {
  ScriptedBackend inner(book_script());
  testing::CountingBackend backend(inner);
  const auto r = detect(kKing, PipelineConfig{}, backend);
  CHECK(backend.calls == 3);
  const auto q0 = whitespace_tokens(backend.prompts[0].question());
  const auto q1 = whitespace_tokens(backend.prompts[1].question());
  const auto q2 = whitespace_tokens(backend.prompts[2].question());
  CHECK(q1.size() + q2.size() == q0.size());
  CHECK(r.split.attentive.size() + r.split.non_attentive.size() == q0.size());
  CHECK(r.split.m_attentive == 9);  // ceil(2/3 * 13)
}

TEST_CASE("token budget holds on the byte-level reference backend") {
  ReferenceBackend inner(ModelWeights::load(testing::source_path("assets/reference-weights.bin")), 42, 6);
  testing::CountingBackend backend(inner);
  const std::string q = "What is the capital of France?";
  const auto r = detect(q, PipelineConfig{}, backend);
  CHECK(backend.calls == 3);
  CHECK(backend.prompts[1].question().size() + backend.prompts[2].question().size() == q.size());
  CHECK(r.split.attentive.join("").size() + r.split.non_attentive.join("").size() == q.size());
}

TEST_CASE("score recomposes from the stored pair") {
  ScriptedBackend backend(book_script());
  for (double lambda : {0.5, 1.0, 2.0}) {
    PipelineConfig c = config_with_k("0.4");
    c.lambda = lambda;
    const auto r = detect(kMorford, c, backend);
    CHECK(r.score.r == lambda * r.pair.r_att - r.pair.r_non_att);
    CHECK(r.score.lambda == lambda);
    CHECK(r.score.r >= -1.0);
    CHECK(r.score.r <= lambda);
  }
}

TEST_CASE("detection is deterministic") {
  ScriptedBackend scripted(book_script());
  CHECK(detect(kKing, PipelineConfig{}, scripted) == detect(kKing, PipelineConfig{}, scripted));
  ReferenceBackend ref(ModelWeights::load(testing::source_path("assets/reference-weights.bin")), 42, 6);
  const auto a = detect("Name a color.", PipelineConfig{}, ref);
  const auto b = detect("Name a color.", PipelineConfig{}, ref);
  CHECK(a == b);
  CHECK(record_to_json(a).dump() == record_to_json(b).dump());
}

TEST_CASE("strategy is recorded and changes scores only through attention") {
  ReferenceBackend ref(ModelWeights::load(testing::source_path("assets/reference-weights.bin")), 42, 4);
  for (auto s : {LayerStrategy::First, LayerStrategy::Mid, LayerStrategy::Last, LayerStrategy::Max}) {
    PipelineConfig c;
    c.strategy = s;
    const auto r = detect("Who wrote it?", c, ref);
    CHECK(r.strategy == s);
    CHECK(r.pass_count == 3);
  }
}

TEST_CASE("degenerate and invalid input") {
  ScriptedBackend backend(book_script());
  try {
    detect("Why?", PipelineConfig{}, backend);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateInput);
  }
  PipelineConfig c;
  c.lambda = 0.0;
  CHECK_THROWS_AS(detect(kKing, c, backend), Error);
  c = PipelineConfig{};
  c.k = Fraction(3, 2);
  CHECK_THROWS_AS(detect(kKing, c, backend), Error);
}

TEST_CASE("pass errors carry the pass that failed") {
  ReferenceBackend inner(ModelWeights::load(testing::source_path("assets/reference-weights.bin")), 42, 4);
  const std::string q(330, 'x');
  try {
    detect(q + " " + q, PipelineConfig{}, inner);
    FAIL("expected an error");
  } catch (const PassError& e) {
    CHECK(e.pass() == Pass::Original);
    CHECK(e.kind() == ErrorKind::Capacity);
  }
}

TEST_CASE("record JSON fields") {
  ScriptedBackend backend(book_script());
  const auto j = record_to_json(detect(kKing, config_with_k("0.45"), backend));
  for (const char* key : {"query", "original_answer", "attentive_answer", "non_attentive_answer", "split",
                          "question_scores", "r_att", "r_non_att", "r", "lambda", "strategy", "pass_count"})
    CHECK(j.contains(key));
  CHECK(j["split"]["k"] == "9/20");
  CHECK(j["pass_count"] == 3);
  CHECK(j["strategy"] == "mean");
}

namespace {

class FailsOnCall final : public Backend {
 public:
  FailsOnCall(const Backend& inner, int fail_at) : inner_(inner), fail_at_(fail_at) {}
  GenerationResult generate(const RenderedPrompt& p, const SamplingOptions& o = {}) const override {
    if (++calls_ == fail_at_) throw Error(ErrorKind::Transport, "connection reset", true);
    return inner_.generate(p, o);
  }
  bool supports_seeded_variation() const override { return false; }
  std::string_view name() const override { return "flaky"; }

 private:
  const Backend& inner_;
  int fail_at_;
  mutable int calls_ = 0;
};

}  // namespace

TEST_CASE("a failure on a later pass aborts the sample with that pass named") {
  ScriptedBackend inner(book_script());
  const std::pair<int, Pass> cases[] = {{1, Pass::Original}, {2, Pass::Attentive}, {3, Pass::NonAttentive}};
  for (const auto& [call, pass] : cases) {
    FailsOnCall backend(inner, call);
    try {
      detect(kKing, PipelineConfig{}, backend);
      FAIL("expected an error");
    } catch (const PassError& e) {
      CHECK(e.pass() == pass);
      CHECK(e.retriable());
      CHECK(std::string(e.what()).find(std::string(to_string(pass)) + " pass") == 0);
    }
  }
}
