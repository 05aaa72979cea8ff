#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "semqo/model_backend.hpp"
#include "semqo/plan.hpp"

namespace semqo {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  int max_output_tokens = 256;
  double temperature = 0.0;  // pinned for repeatable analytics
};

struct RetryPolicy {
  int max_attempts = 3;
  int backoff_initial_ms = 200;
  int backoff_ceiling_ms = 5000;
};

struct ChatUsage {
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
  bool estimated = false;  // true when the server omitted usage
};

struct ChatResponse {
  std::string content;
  ChatUsage usage;
};

struct ClientConfig {
  std::string endpoint;  // e.g. http://host:port (path /v1/chat/completions)
  std::string api_key;
  RetryPolicy retry;
  int timeout_seconds = 60;
  double chars_per_token = 4.0;  // usage fallback estimation
};

/// Reads SEMQO_ENDPOINT / SEMQO_API_KEY; throws ConfigError when the
/// endpoint is unset.
ClientConfig client_config_from_env();

/// Minimal chat-completions client. 4xx responses raise ConfigError with
/// no retry; 5xx and transport failures are retried with exponential
/// backoff, then raise TransportError.
class LlmClient {
 public:
  explicit LlmClient(ClientConfig config);
  ~LlmClient();
  LlmClient(LlmClient&&) noexcept;
  LlmClient& operator=(LlmClient&&) noexcept;

  ChatResponse chat_complete(const ChatRequest& request) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Adapts one remote model to the executor's backend interface.
class RemoteModelBackend : public ModelBackend {
 public:
  RemoteModelBackend(std::shared_ptr<LlmClient> client, std::string model_id);
  std::string invoke(OperatorKind kind, const std::string& instruction,
                     const std::string& input) override;

 private:
  std::shared_ptr<LlmClient> client_;
  std::string model_id_;
};

/// Pricing file: JSON map model-id -> {"input": .., "output": ..} in
/// currency per 1e6 tokens.
PricingTable pricing_from_json(const std::string& text);

/// Remote ladder config: {"models": ["id", ...]} ordered weakest-first
/// plus a pricing map as above; prices must rise along the ladder.
ModelLadder build_remote_ladder(const std::vector<std::string>& model_ids,
                                const PricingTable& pricing,
                                std::shared_ptr<LlmClient> client);

}  // namespace semqo
