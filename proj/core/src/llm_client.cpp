#include "semqo/llm_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace semqo {

namespace {

std::string instruction_prompt(OperatorKind kind, const std::string& instruction,
                               const std::string& input) {
  std::string prompt;
  switch (kind) {
    case OperatorKind::Filter:
      prompt = "Answer strictly true or false. Condition: ";
      break;
    case OperatorKind::Rank:
      prompt = "Answer with a single numeric score. Criterion: ";
      break;
    default:
      prompt = "Follow the instruction and answer concisely. Instruction: ";
      break;
  }
  prompt += instruction;
  prompt += "\nInput:\n";
  prompt += input;
  return prompt;
}

}  // namespace

ClientConfig client_config_from_env() {
  ClientConfig config;
  const char* endpoint = std::getenv("SEMQO_ENDPOINT");
  if (!endpoint || !*endpoint) {
    throw ConfigError("SEMQO_ENDPOINT is not set");
  }
  config.endpoint = endpoint;
  if (const char* key = std::getenv("SEMQO_API_KEY")) config.api_key = key;
  return config;
}

struct LlmClient::Impl {
  ClientConfig config;
};

LlmClient::LlmClient(ClientConfig config)
    : impl_(std::make_unique<Impl>(Impl{std::move(config)})) {
  if (impl_->config.endpoint.empty()) {
    throw ConfigError("endpoint must not be empty");
  }
}

LlmClient::~LlmClient() = default;
LlmClient::LlmClient(LlmClient&&) noexcept = default;
LlmClient& LlmClient::operator=(LlmClient&&) noexcept = default;

ChatResponse LlmClient::chat_complete(const ChatRequest& request) const {
  const ClientConfig& cfg = impl_->config;

  nlohmann::json body;
  body["model"] = request.model;
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_output_tokens;
  body["messages"] = nlohmann::json::array();
  std::size_t prompt_chars = 0;
  for (const auto& message : request.messages) {
    body["messages"].push_back(
        {{"role", message.role}, {"content", message.content}});
    prompt_chars += message.content.size();
  }
  const std::string payload = body.dump();

  std::string last_error;
  int backoff_ms = cfg.retry.backoff_initial_ms;
  for (int attempt = 1; attempt <= cfg.retry.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms = std::min(backoff_ms * 2, cfg.retry.backoff_ceiling_ms);
    }

    httplib::Client http(cfg.endpoint);
    http.set_connection_timeout(cfg.timeout_seconds);
    http.set_read_timeout(cfg.timeout_seconds);
    httplib::Headers headers;
    if (!cfg.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + cfg.api_key);
    }
    auto res = http.Post("/v1/chat/completions", headers, payload,
                         "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 400 && res->status < 500) {
      throw ConfigError("chat endpoint rejected the request (HTTP " +
                        std::to_string(res->status) + "): " + res->body);
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }

    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed chat response: ") + e.what());
    }
    ChatResponse out;
    try {
      out.content = reply.at("choices").at(0).at("message").at("content")
                        .get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("chat response missing content: ") +
                           e.what());
    }
    if (reply.contains("usage") &&
        reply["usage"].contains("prompt_tokens") &&
        reply["usage"].contains("completion_tokens")) {
      out.usage.prompt_tokens = reply["usage"]["prompt_tokens"].get<std::uint64_t>();
      out.usage.completion_tokens =
          reply["usage"]["completion_tokens"].get<std::uint64_t>();
    } else {
      out.usage.estimated = true;
      out.usage.prompt_tokens = static_cast<std::uint64_t>(
          std::ceil(prompt_chars / cfg.chars_per_token));
      out.usage.completion_tokens = static_cast<std::uint64_t>(
          std::ceil(out.content.size() / cfg.chars_per_token));
    }
    return out;
  }
  throw TransportError("chat request failed after " +
                       std::to_string(cfg.retry.max_attempts) +
                       " attempts: " + last_error);
}

RemoteModelBackend::RemoteModelBackend(std::shared_ptr<LlmClient> client,
                                       std::string model_id)
    : client_(std::move(client)), model_id_(std::move(model_id)) {}

std::string RemoteModelBackend::invoke(OperatorKind kind,
                                       const std::string& instruction,
                                       const std::string& input) {
  ChatRequest request;
  request.model = model_id_;
  request.messages.push_back(
      {"user", instruction_prompt(kind, instruction, input)});
  return client_->chat_complete(request).content;
}

PricingTable pricing_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad pricing JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("pricing JSON must be an object");
  PricingTable pricing;
  for (const auto& [model, entry] : doc.items()) {
    if (!entry.is_object() || !entry.contains("input") ||
        !entry.contains("output")) {
      throw InputError("pricing entry for '" + model +
                       "' needs {input, output} per 1e6 tokens");
    }
    ModelPrice price;
    price.input_per_token = entry["input"].get<double>() / 1e6;
    price.output_per_token = entry["output"].get<double>() / 1e6;
    pricing.per_model[model] = price;
  }
  return pricing;
}

ModelLadder build_remote_ladder(const std::vector<std::string>& model_ids,
                                const PricingTable& pricing,
                                std::shared_ptr<LlmClient> client) {
  if (model_ids.empty()) throw InputError("remote ladder lists no models");
  std::vector<LadderModel> models;
  models.reserve(model_ids.size());
  for (const auto& id : model_ids) {
    LadderModel model;
    model.id = id;
    model.price = pricing.price_of(id);
    model.backend = std::make_shared<RemoteModelBackend>(client, id);
    models.push_back(std::move(model));
  }
  return ModelLadder(std::move(models));
}

}  // namespace semqo
