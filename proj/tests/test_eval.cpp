#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "agser/dataset.hpp"
#include "agser/error.hpp"
#include "agser/evaluation.hpp"
#include "agser/metrics.hpp"
#include "agser/scripted_backend.hpp"
#include "support.hpp"

using namespace agser;

namespace {

// Pairwise AUC: P(score_pos > score_neg) + 0.5 P(equal).
double pairwise_auc(const std::vector<double>& s, const std::vector<bool>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] && !y[j]) {
        pairs += 1.0;
        wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
  return wins / pairs;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Structural;
}

ScriptTable eval_script() {
  return ScriptTable::from_json(nlohmann::json::parse(R"([
    {"match": "What is the capital of France?", "answer": "Paris.", "attention_pattern": "peaked:[4,6]",
     "variants": ["Paris.", "Paris.", "Paris.", "Paris.", "Paris."]},
    {"match": "What is capital France?", "answer": "Paris."},
    {"match": "the of", "answer": "I am not sure."},
    {"match": "What is the capital of Peru?", "answer": "Cusco.", "attention_pattern": "peaked:[4,6]",
     "variants": ["Lima.", "Cusco.", "Arequipa.", "Lima.", "Cusco."]},
    {"match": "What is capital Peru?", "answer": "Lima."}
  ])"));
}

std::vector<DatasetSample> eval_samples() {
  return {{"fr", "What is the capital of France?", "Paris.", Domain::GCI},
          {"pe", "What is the capital of Peru?", "Lima.", Domain::GCI}};
}

}  // namespace

TEST_CASE("AUC small cases") {
  CHECK(auc(std::vector<double>{0.9, 0.1}, {true, false}) == 1.0);
  CHECK(auc(std::vector<double>{0.1, 0.9}, {true, false}) == 0.0);
  CHECK(auc(std::vector<double>{0.5, 0.5}, {true, false}) == 0.5);
  CHECK(auc(std::vector<double>{0.8, 0.4, 0.6, 0.2}, {true, true, false, false}) == 0.75);
}

TEST_CASE("AUC matches the pairwise oracle") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    std::vector<double> s(n);
    std::vector<bool> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 7) / 6.0 - 0.5;
      y[i] = rng() % 2;
    }
    y[0] = true;
    y[1] = false;
    CHECK(std::abs(auc(s, y) - pairwise_auc(s, y)) < 1e-12);
  }
}

TEST_CASE("AUC properties") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 4 + rng() % 30;
    std::vector<double> s(n), shifted(n), flipped(n);
    std::vector<bool> y(n), ny(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = u(rng);
      shifted[i] = 3.0 * s[i] + 1.0;
      flipped[i] = -s[i];
      y[i] = i % 2;
      ny[i] = !y[i];
    }
    const double a = auc(s, y);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    CHECK(std::abs(auc(shifted, y) - a) < 1e-12);   // rank based
    CHECK(std::abs(auc(flipped, y) - (1.0 - a)) < 1e-12);
    CHECK(std::abs(auc(s, ny) - (1.0 - a)) < 1e-12);
  }
}

TEST_CASE("AUC errors") {
  CHECK(kind_of([] { auc(std::vector<double>{0.1, 0.2}, {true, true}); }) == ErrorKind::UndefinedMetric);
  CHECK(kind_of([] { auc(std::vector<double>{}, {}); }) == ErrorKind::UndefinedMetric);
  CHECK(kind_of([] { auc(std::vector<double>{0.1}, {true, false}); }) == ErrorKind::Structural);
  CHECK(kind_of([] { auc(std::vector<double>{NAN, 0.1}, {true, false}); }) == ErrorKind::Validation);
}

TEST_CASE("bin edges") {
  const auto d = bin_distribution(std::vector<double>{0.0, 0.2499, 0.25, 0.5, 0.7499, 0.75, 1.0, 0.3});
  CHECK(d[0] == 2.0 / 8);
  CHECK(d[1] == 2.0 / 8);
  CHECK(d[2] == 2.0 / 8);
  CHECK(d[3] == 2.0 / 8);
  CHECK(bin_distribution(std::vector<double>{}) == Distribution{0, 0, 0, 0});
  CHECK(kind_of([] { bin_distribution(std::vector<double>{1.01}); }) == ErrorKind::Validation);
  CHECK(kind_of([] { bin_distribution(std::vector<double>{-0.01}); }) == ErrorKind::Validation);
}

TEST_CASE("labels") {
  CHECK(label_correctness("Stephen King, in 2001.", "Stephen King, 2001", 0.5));
  CHECK_FALSE(label_correctness("Mark Morford, in 2002.", "Judy Blume, in 1998.", 0.5));
  CHECK(label_exact_match("paris", "Paris."));
  CHECK_FALSE(label_exact_match("Paris, France", "Paris."));
  CHECK(kind_of([] { label_correctness("a", "a", 0.0); }) == ErrorKind::Configuration);
  CHECK(parse_label_mode("exact") == LabelMode::ExactMatch);
}

TEST_CASE("dataset parsing") {
  std::istringstream in(
      "{\"id\":\"a\",\"question\":\"Q1?\",\"gold_answer\":\"A1\",\"domain\":\"books\"}\n"
      "\n"
      "{\"id\":\"b\",\"question\":\"Q2?\",\"gold_answer\":\"A2\"}\r\n");
  const auto d = parse_dataset(in, "mem");
  REQUIRE(d.size() == 2);
  CHECK(d[0].domain == Domain::Books);
  CHECK(d[1].domain == Domain::Other);
  CHECK(d[1].gold_answer == "A2");
}

TEST_CASE("dataset errors name the line") {
  const auto message = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_dataset(in, "data.jsonl");
    } catch (const Error& e) {
      return std::string(to_string(e.kind())) + "|" + e.what();
    }
    return std::string("ok");
  };
  const std::string ok = "{\"id\":\"a\",\"question\":\"Q\",\"gold_answer\":\"A\"}\n";
  CHECK(message(ok + "{broken\n").rfind("parse|data.jsonl:2", 0) == 0);
  CHECK(message(ok + "{\"id\":\"b\",\"question\":\"Q\"}\n").rfind("parse|data.jsonl:2", 0) == 0);
  CHECK(message(ok + "[1,2]\n").rfind("parse|data.jsonl:2", 0) == 0);
  CHECK(message(ok + "{\"id\":7,\"question\":\"Q\",\"gold_answer\":\"A\"}\n").rfind("parse|", 0) == 0);
  CHECK(message(ok + ok).rfind("validation|data.jsonl:2", 0) == 0);
  CHECK(message(ok + "{\"id\":\"c\",\"question\":\"\",\"gold_answer\":\"A\"}\n").rfind("validation|", 0) == 0);
  CHECK(message(ok + "{\"id\":\"c\",\"question\":\"Q\",\"gold_answer\":\"A\",\"domain\":\"poetry\"}\n")
            .rfind("validation|data.jsonl:2", 0) == 0);
  CHECK(kind_of([] { load_dataset("/nonexistent/data.jsonl"); }) == ErrorKind::Parse);
}

TEST_CASE("resample baseline") {
  ScriptedBackend backend(eval_script());
  const auto tmpl = PromptTemplate::chatbot();
  const auto same = resample_baseline("What is the capital of France?", tmpl, backend, 5, 42);
  CHECK(same.score == 1.0);
  CHECK(same.resampled.size() == 5);

  // seeds 43..47 pick variants 3,4,0,1,2 -> Lima, Cusco, Lima, Cusco, Arequipa against "Cusco."
  const auto mixed = resample_baseline("What is the capital of Peru?", tmpl, backend, 5, 42);
  double expected = 0.0;
  for (const char* v : {"Lima.", "Cusco.", "Lima.", "Cusco.", "Arequipa."}) expected += rouge_l(v, "Cusco.");
  CHECK(mixed.original_answer == "Cusco.");
  CHECK(mixed.score == doctest::Approx(expected / 5.0));
  CHECK(mixed.score == doctest::Approx(0.4));
  CHECK(mixed.resampled[0] == "Lima.");

  testing::CountingBackend counted(backend);
  resample_baseline("What is the capital of Peru?", tmpl, counted, 3, 42);
  CHECK(counted.calls == 4);
  CHECK(kind_of([&] { resample_baseline("x y", tmpl, backend, 0, 42); }) == ErrorKind::Configuration);
}

TEST_CASE("evaluate on a two-sample dataset") {
  ScriptedBackend backend(eval_script());
  EvalOptions opts;
  opts.compare_resample = true;
  const auto report = evaluate(eval_samples(), opts, backend, {{"note", "test"}});
  CHECK(report.n_samples == 2);
  CHECK(report.n_hallucination == 1);
  CHECK(report.auc == 1.0);
  REQUIRE(report.resample_auc);
  CHECK(*report.resample_auc == 1.0);
  CHECK(report.outcomes[0].label);
  CHECK_FALSE(report.outcomes[1].label);
  CHECK(report.bins_att.non_hallucination == Distribution{0, 0, 0, 1});
  CHECK(report.bins_att.hallucination == Distribution{1, 0, 0, 0});

  const auto j = report_to_json(report, "");
  CHECK_FALSE(j.contains("generated_at"));
  CHECK(j["config"]["note"] == "test");
  CHECK(j["records"].size() == 2);
  CHECK(j["baselines"]["resample"]["n"] == 5);
  CHECK(j["baselines"]["sbert"].is_null());
  CHECK(report_to_json(report, "2026-01-01T00:00:00Z")["generated_at"] == "2026-01-01T00:00:00Z");

  const auto csv = report_to_csv(report);
  CHECK(csv.rfind("id,r_att,r_non_att,r,label,resample\nfr,1.0,0.0,1.0,1,1.0\n", 0) == 0);
}

TEST_CASE("evaluate keeps dataset order with many workers") {
  ScriptedBackend backend(eval_script());
  std::vector<DatasetSample> samples;
  for (int i = 0; i < 40; ++i) {
    auto s = eval_samples()[static_cast<std::size_t>(i % 2)];
    s.id = "s" + std::to_string(i);
    samples.push_back(s);
  }
  EvalOptions one, many;
  many.workers = 4;
  const auto a = evaluate(samples, one, backend), b = evaluate(samples, many, backend);
  CHECK(report_to_json(a, "").dump() == report_to_json(b, "").dump());
  CHECK(b.outcomes[7].sample.id == "s7");
}

TEST_CASE("failed samples are reported and excluded") {
  ScriptedBackend backend(eval_script());
  auto samples = eval_samples();
  samples.push_back({"short", "Why?", "Because.", Domain::Other});
  const auto report = evaluate(samples, EvalOptions{}, backend);
  CHECK(report.n_samples == 2);
  REQUIRE(report.failures.size() == 1);
  CHECK(report.failures[0].id == "short");
  CHECK(report.failures[0].kind == "degenerate-input");
  CHECK(report_to_json(report, "")["failures"].size() == 1);
}

TEST_CASE("single-class datasets have no AUC") {
  ScriptedBackend backend(eval_script());
  const std::vector<DatasetSample> one{eval_samples()[0]};
  CHECK(kind_of([&] { evaluate(one, EvalOptions{}, backend); }) == ErrorKind::UndefinedMetric);
  CHECK(kind_of([&] { evaluate({}, EvalOptions{}, backend); }) == ErrorKind::UndefinedMetric);
}

TEST_CASE("summary tables") {
  ScriptedBackend backend(eval_script());
  const auto report = evaluate(eval_samples(), EvalOptions{}, backend);
  const auto text = format_report_summary(report);
  CHECK(text.find("AUC (AGSER): 1.0000") != std::string::npos);
  CHECK(text.find("[0.0,0.25)  [0.25,0.5)  [0.5,0.75)  [0.75,1.0]") != std::string::npos);
  CHECK(text.find("Hallucination Samples") != std::string::npos);
  CHECK(text.find("0.000       0.000       0.000       1.000") != std::string::npos);
}
