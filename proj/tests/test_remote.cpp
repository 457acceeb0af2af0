#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>

#include <random>
#include <thread>

#include "agser/error.hpp"
#include "agser/pipeline.hpp"
#include "agser/reference_model.hpp"
#include "agser/remote_backend.hpp"
#include "agser/scripted_backend.hpp"
#include "agser/wire.hpp"
#include "support.hpp"

using namespace agser;

namespace {

// Runs a GenerationServer on an ephemeral port for the lifetime of the object.
struct LocalServer {
  GenerationServer server;
  int port;
  std::thread thread;

  explicit LocalServer(const Backend& backend) : server(backend), port(server.bind_any_port()) {
    thread = std::thread([this] { server.listen(); });
    server.wait_until_ready();
  }
  ~LocalServer() {
    server.stop();
    thread.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port); }
};

// Raw httplib server with a fixed reply.
struct CannedServer {
  httplib::Server server;
  int port;
  std::thread thread;

  CannedServer(int status, std::string body) {
    server.Post("/generate", [status, body](const httplib::Request&, httplib::Response& res) {
      res.status = status;
      res.set_content(body, "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~CannedServer() {
    server.stop();
    thread.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port); }
};

ScriptTable demo_script() {
  return ScriptTable::from_json(nlohmann::json::parse(R"([
    {"match": "What is the capital of France?", "answer": "Paris.", "attention_pattern": "peaked:[4,6]"},
    {"match": "What is capital France?", "answer": "Paris."},
    {"match": "the of", "answer": "The Godfather."}
  ])"));
}

GenerationResult random_result(std::mt19937_64& rng) {
  GenerationResult r;
  const std::size_t m = 1 + rng() % 12;
  std::vector<std::string> toks;
  for (std::size_t i = 0; i < m; ++i) toks.push_back("t" + std::to_string(rng() % 1000) + (rng() % 4 ? "" : "\"\n"));
  r.prompt_tokens = TokenSequence::from_tokens(toks);
  const std::size_t start = 1 + rng() % m;
  r.question_span = {start, start + rng() % (m - start + 1)};
  const std::size_t a = rng() % 5;
  std::vector<std::string> ans;
  for (std::size_t i = 0; i < a; ++i) ans.push_back("w" + std::to_string(rng() % 50));
  r.answer_tokens = TokenSequence::from_tokens(ans);
  r.answer_text = r.answer_tokens.join(" ");
  r.attention = testing::random_tensor(1 + rng() % 4, 1 + rng() % 3, m, rng).to_compact();
  r.token_separator = rng() % 2 ? " " : "";
  r.unscripted = rng() % 2;
  return r;
}

}  // namespace

TEST_CASE("generation results survive the wire") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const auto r = random_result(rng);
    const auto text = dump_json(result_to_json(r));
    CHECK(result_from_json(nlohmann::json::parse(text)) == r);
  }
}

TEST_CASE("full-matrix wire form") {
  std::mt19937_64 rng(2);
  GenerationResult r;
  r.prompt_tokens = TokenSequence::from_tokens({"a", "b", "c"});
  r.question_span = {2, 3};
  r.attention = testing::random_tensor(2, 2, 3, rng);
  const auto j = result_to_json(r, false);
  CHECK(j.contains("layers"));
  CHECK(result_from_json(j) == r);
  CHECK(j.at("question_span") == nlohmann::json::array({2, 3}));
}

TEST_CASE("malformed results are rejected") {
  std::mt19937_64 rng(3);
  auto j = result_to_json(random_result(rng));
  auto bad = j;
  bad["question_span"] = {0, 99};
  CHECK_THROWS_AS(result_from_json(bad), Error);
  bad = j;
  bad["prompt_tokens"].push_back("extra");
  CHECK_THROWS_AS(result_from_json(bad), Error);
  bad = j;
  bad.erase("answer");
  CHECK_THROWS_AS(result_from_json(bad), Error);
}

TEST_CASE("requests survive the wire") {
  GenerateRequest req;
  req.prompt = render_prompt(PromptTemplate::chatbot(), "Who?");
  req.max_new_tokens = 7;
  req.seed = 99;
  req.sample = true;
  const auto j = request_to_json(req);
  CHECK(j.at("prompt") == req.prompt.text);
  CHECK(j.at("max_new_tokens") == 7);
  CHECK(j.at("seed") == 99);
  const auto back = request_from_json(j);
  CHECK(back.prompt == req.prompt);
  CHECK(back.sample);

  // The bare contract without extension fields.
  const auto plain = request_from_json({{"prompt", "hello"}, {"max_new_tokens", 3}, {"seed", 1}});
  CHECK(plain.prompt.question() == "hello");
  CHECK_FALSE(plain.sample);
  CHECK_THROWS_AS(request_from_json({{"prompt", "x"}, {"max_new_tokens", 0}, {"seed", 1}}), Error);
  CHECK_THROWS_AS(request_from_json({{"max_new_tokens", 3}}), Error);
}

TEST_CASE("remote detection equals local detection") {
  ScriptedBackend local(demo_script());
  LocalServer srv(local);
  RemoteBackend remote(srv.endpoint(), 42, 24);
  const auto expected = detect("What is the capital of France?", PipelineConfig{}, local);
  const auto got = detect("What is the capital of France?", PipelineConfig{}, remote);
  CHECK(got == expected);
  CHECK(got.pair.r_att == 1.0);
  CHECK(got.pair.r_non_att == 0.0);
  CHECK_FALSE(remote.supports_seeded_variation());
}

TEST_CASE("remote reference backend returns compact attention") {
  ReferenceBackend local(ModelWeights::load(testing::source_path("assets/reference-weights.bin")), 42, 8);
  LocalServer srv(local);
  RemoteBackend remote(srv.endpoint(), 42, 8);
  const auto prompt = render_prompt(PromptTemplate::chatbot(), "Capital of France?");
  const auto a = local.generate(prompt);
  const auto b = remote.generate(prompt);
  CHECK_FALSE(b.attention.has_full_matrices());
  CHECK(b.attention == a.attention.to_compact());
  CHECK(b.answer_text == a.answer_text);
  CHECK(b.token_separator == "");
  CHECK(contribution_scores(b.attention, LayerStrategy::Mean).scores ==
        contribution_scores(a.attention, LayerStrategy::Mean).scores);
}

TEST_CASE("capacity errors map through HTTP 413") {
  ReferenceBackend local(ModelWeights::load(testing::source_path("assets/reference-weights.bin")), 42, 8);
  LocalServer srv(local);
  RemoteBackend remote(srv.endpoint(), 42, 8);
  try {
    remote.generate(render_prompt(PromptTemplate::bare(), std::string(700, 'a')));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Capacity);
  }
}

TEST_CASE("unreachable endpoint is a retriable transport error") {
  int port;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  RemoteBackend remote("http://127.0.0.1:" + std::to_string(port), 42, 8, 2);
  try {
    remote.generate(render_prompt(PromptTemplate::bare(), "hi"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Transport);
    CHECK(e.retriable());
  }
}

TEST_CASE("server errors and malformed replies") {
  const auto prompt = render_prompt(PromptTemplate::bare(), "hi there");
  {
    CannedServer srv(503, R"({"error": "overloaded"})");
    try {
      RemoteBackend(srv.endpoint(), 42, 8).generate(prompt);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Transport);
      CHECK(e.retriable());
      CHECK(std::string(e.what()).find("overloaded") != std::string::npos);
    }
  }
  {
    CannedServer srv(400, R"({"error": "bad"})");
    try {
      RemoteBackend(srv.endpoint(), 42, 8).generate(prompt);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Transport);
      CHECK_FALSE(e.retriable());
    }
  }
  {
    CannedServer srv(200, "not json");
    try {
      RemoteBackend(srv.endpoint(), 42, 8).generate(prompt);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Transport);
      CHECK_FALSE(e.retriable());
    }
  }
  {
    // Rows that do not sum to one.
    CannedServer srv(200, R"({"L":1,"H":1,"M":2,"last_rows":[[[0.9,0.9]]],"answer":"x",)"
                          R"("prompt_tokens":["a","b"],"question_span":[1,2]})");
    CHECK_THROWS_AS(RemoteBackend(srv.endpoint(), 42, 8).generate(prompt), Error);
  }
}

TEST_CASE("pass errors name the failing pass") {
  int port;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  RemoteBackend remote("http://127.0.0.1:" + std::to_string(port), 42, 8, 2);
  try {
    detect("What is the capital of France?", PipelineConfig{}, remote);
    FAIL("expected an error");
  } catch (const PassError& e) {
    CHECK(e.pass() == Pass::Original);
    CHECK(e.kind() == ErrorKind::Transport);
    CHECK(e.retriable());
    CHECK(std::string(e.what()).rfind("original pass:", 0) == 0);
  }
}
