#pragma once

#include <memory>
#include <string>

#include "agser/backend.hpp"

namespace agser {

/// Client for POST {endpoint}/generate. A fresh connection is opened per call,
/// so one instance can serve concurrent callers.
///
/// Failures surface as Error(Transport) with retriable() set for connection
/// failures and 5xx replies; HTTP 413 maps to Error(Capacity).
class RemoteBackend final : public Backend {
 public:
  RemoteBackend(std::string endpoint, std::uint64_t seed, int max_new_tokens,
                int timeout_seconds = 30);

  GenerationResult generate(const RenderedPrompt& prompt,
                            const SamplingOptions& options = {}) const override;
  /// The wire contract is greedy only.
  bool supports_seeded_variation() const override { return false; }
  std::string_view name() const override { return "remote"; }

  const std::string& endpoint() const noexcept { return endpoint_; }

 private:
  std::string endpoint_;
  std::uint64_t seed_;
  int max_new_tokens_;
  int timeout_seconds_;
};

/// Serves any Backend over the remote wire protocol.
class GenerationServer {
 public:
  explicit GenerationServer(const Backend& backend);
  ~GenerationServer();
  GenerationServer(const GenerationServer&) = delete;
  GenerationServer& operator=(const GenerationServer&) = delete;

  /// Binds to an ephemeral port and returns it.
  int bind_any_port(const std::string& host = "127.0.0.1");
  bool bind(const std::string& host, int port);
  /// Blocks until stop().
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace agser
