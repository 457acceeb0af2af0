#include "agser/remote_backend.hpp"

#include <httplib.h>

#include "agser/error.hpp"
#include "agser/wire.hpp"

namespace agser {

namespace {

std::string error_message(const httplib::Result& res) {
  try {
    auto j = nlohmann::json::parse(res->body);
    if (j.is_object() && j.contains("error") && j["error"].is_string()) return j["error"].get<std::string>();
  } catch (const nlohmann::json::exception&) {
  }
  return res->body.substr(0, 200);
}

}  // namespace

RemoteBackend::RemoteBackend(std::string endpoint, std::uint64_t seed, int max_new_tokens,
                             int timeout_seconds)
    : endpoint_(std::move(endpoint)), seed_(seed), max_new_tokens_(max_new_tokens),
      timeout_seconds_(timeout_seconds) {
  if (endpoint_.empty()) throw Error(ErrorKind::Configuration, "remote backend needs an endpoint");
  while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
  if (max_new_tokens_ < 1) throw Error(ErrorKind::Configuration, "max_new_tokens must be positive");
}

GenerationResult RemoteBackend::generate(const RenderedPrompt& prompt,
                                         const SamplingOptions& options) const {
  if (prompt.text.empty()) throw Error(ErrorKind::Validation, "empty prompt");
  GenerateRequest req;
  req.prompt = prompt;
  req.max_new_tokens = max_new_tokens_;
  req.seed = options.seed.value_or(seed_);
  req.sample = options.sample;

  httplib::Client client(endpoint_);
  if (!client.is_valid())
    throw Error(ErrorKind::Configuration, "invalid remote endpoint '" + endpoint_ + "'");
  client.set_connection_timeout(timeout_seconds_);
  client.set_read_timeout(timeout_seconds_);
  auto res = client.Post("/generate", dump_json(request_to_json(req)), "application/json");
  if (!res)
    throw Error(ErrorKind::Transport,
                "cannot reach " + endpoint_ + ": " + httplib::to_string(res.error()), true);
  if (res->status == 413) throw Error(ErrorKind::Capacity, "remote backend: " + error_message(res));
  if (res->status >= 500)
    throw Error(ErrorKind::Transport,
                "remote backend HTTP " + std::to_string(res->status) + ": " + error_message(res), true);
  if (res->status != 200)
    throw Error(ErrorKind::Transport,
                "remote backend HTTP " + std::to_string(res->status) + ": " + error_message(res), false);
  try {
    auto result = result_from_json(nlohmann::json::parse(res->body));
    result.attention.validate();
    return result;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Transport, std::string("malformed reply from remote backend: ") + e.what(), false);
  } catch (const Error& e) {
    throw Error(ErrorKind::Transport, std::string("malformed reply from remote backend: ") + e.what(), false);
  }
}

struct GenerationServer::Impl {
  const Backend& backend;
  httplib::Server server;

  explicit Impl(const Backend& b) : backend(b) {
    server.Post("/generate", [this](const httplib::Request& request, httplib::Response& response) {
      auto fail = [&](int status, const std::string& message) {
        response.status = status;
        response.set_content(dump_json({{"error", message}}), "application/json");
      };
      try {
        const auto req = request_from_json(nlohmann::json::parse(request.body));
        SamplingOptions opts;
        opts.sample = req.sample;
        opts.seed = req.seed;
        const auto result = backend.generate(req.prompt, opts);
        response.set_content(dump_json(result_to_json(result, true)), "application/json");
      } catch (const nlohmann::json::exception& e) {
        fail(400, std::string("request is not valid JSON: ") + e.what());
      } catch (const Error& e) {
        switch (e.kind()) {
          case ErrorKind::Capacity: fail(413, e.what()); break;
          case ErrorKind::Parse:
          case ErrorKind::Validation:
          case ErrorKind::Structural: fail(400, e.what()); break;
          default: fail(500, e.what()); break;
        }
      } catch (const std::exception& e) {
        fail(500, e.what());
      }
    });
  }
};

GenerationServer::GenerationServer(const Backend& backend) : impl_(std::make_unique<Impl>(backend)) {}
GenerationServer::~GenerationServer() { stop(); }

int GenerationServer::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool GenerationServer::bind(const std::string& host, int port) { return impl_->server.bind_to_port(host, port); }
bool GenerationServer::listen() { return impl_->server.listen_after_bind(); }
void GenerationServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}
void GenerationServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace agser
