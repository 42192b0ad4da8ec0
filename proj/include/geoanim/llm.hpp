#pragma once

// Provider-neutral chat-completion gateway with tool calling. Requests are
// keyed by the SHA-256 of their canonical form; in record mode every live
// exchange is written to fixtures/<agent>/<hash>.txt and replay mode serves
// those files without touching the network.

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoanim/http.hpp"
#include "geoanim/model.hpp"
#include "geoanim/runtime.hpp"

namespace geoanim::llm {

using json = nlohmann::json;

struct ToolSchema {
  std::string name;
  std::string description;
  json parameters;  // JSON Schema subset, see schema.hpp
};

/// Identifies the versioned prompt a request was built from. Recorded in
/// fixture headers; not part of the request hash.
struct PromptInfo {
  std::string id;
  int version = 1;
  std::string sha256;
};

struct ChatRequest {
  std::string agent;  // "breakdown" or "researcher"; selects endpoint and fixture folder
  std::string model_id;
  std::vector<ChatMessage> messages;
  std::vector<ToolSchema> tools;
  double temperature = 0.0;
  int max_tokens = 4096;
  std::optional<PromptInfo> prompt;
};

struct ToolCall {
  std::string name;
  json arguments;             // null when the raw text is not JSON
  std::string raw_arguments;  // exactly as sent by the model
};

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::optional<std::string> text;
  std::vector<ToolCall> tool_calls;
  Usage usage;
  double latency_ms = 0.0;
};

/// Throws ValidationError: no messages, first role not system/user,
/// duplicate tool names, unusable parameter schema.
void validate_request(const ChatRequest& req);

/// {model, messages, tools, temperature, max_tokens}; sorted keys.
json canonical_request(const ChatRequest& req);
std::string request_hash(const ChatRequest& req);

/// OpenAI-compatible chat-completions body.
json wire_request(const ChatRequest& req);
/// Throws ParseError with the raw body attached.
ChatResponse parse_wire_response(const std::string& body);

struct ParsedToolCall {
  json arguments;
  std::vector<std::string> warnings;
  std::string raw;
};

/// First tool call named `expected.name`, conformed to its schema.
/// MissingToolCallError when absent; SchemaViolationError (detail carries
/// the failing fields and the raw text) when the arguments do not fit.
ParsedToolCall parse_tool_call(const ChatResponse& resp, const ToolSchema& expected);

// --- Transport and gateway ---------------------------------------------------

enum class Mode { live, record, replay };
const char* to_string(Mode mode);
/// Throws ValidationError for anything but live|record|replay.
Mode parse_mode(const std::string& name);

struct Endpoint {
  std::string base_url;
  std::string api_key;
};

/// Sends one serialized body to an endpoint's /chat/completions.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual http::Response post(const Endpoint& endpoint, const std::string& body) = 0;
};

class HttpChatTransport : public ChatTransport {
 public:
  explicit HttpChatTransport(double timeout_seconds = 120.0) : timeout_(timeout_seconds) {}
  http::Response post(const Endpoint& endpoint, const std::string& body) override;

 private:
  double timeout_;
};

struct GatewayConfig {
  Mode mode = Mode::replay;
  std::filesystem::path fixtures_dir = "fixtures";
  /// Logical role -> model id.
  std::map<std::string, std::string> models = {{"breakdown", "o1"}, {"researcher", "sonar-pro"}};
  Endpoint primary{"https://api.openai.com/v1", ""};
  Endpoint research{"https://api.perplexity.ai", ""};
  int max_retries = 3;
  std::vector<double> backoff_seconds = {1.0, 2.0, 4.0};

  /// LLM_MODE, LLM_FIXTURES_DIR, LLM_BASE_URL, LLM_API_KEY,
  /// RESEARCH_LLM_BASE_URL, RESEARCH_LLM_API_KEY, LLM_BREAKDOWN_MODEL,
  /// LLM_RESEARCHER_MODEL.
  static GatewayConfig from_env();
};

std::filesystem::path fixture_path(const std::filesystem::path& dir, const std::string& agent,
                                   const std::string& hash);

class Gateway {
 public:
  explicit Gateway(GatewayConfig config, std::shared_ptr<ChatTransport> transport = nullptr,
                   Sleeper sleeper = real_sleep);

  ChatResponse complete(const ChatRequest& req);

  /// Model id for a logical role; throws NotFoundError for unknown roles.
  const std::string& model_for(const std::string& role) const;
  const GatewayConfig& config() const { return config_; }
  /// Transport calls made so far (attempts, including retries).
  std::size_t network_calls() const { return network_calls_.load(); }

 private:
  ChatResponse call_live(const ChatRequest& req, std::string& raw_body);
  ChatResponse replay(const ChatRequest& req, const std::string& hash) const;
  void record(const ChatRequest& req, const std::string& hash, const std::string& raw_body) const;

  GatewayConfig config_;
  std::shared_ptr<ChatTransport> transport_;
  Sleeper sleeper_;
  std::atomic<std::size_t> network_calls_{0};
};

}  // namespace geoanim::llm
