#include "geoanim/llm.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "geoanim/codec.hpp"
#include "geoanim/errors.hpp"
#include "geoanim/ids.hpp"
#include "geoanim/schema.hpp"

namespace geoanim::llm {
namespace {

constexpr std::string_view kRequestMarker = "--- request\n";
constexpr std::string_view kResponseMarker = "\n--- response\n";

json message_json(const ChatMessage& m) { return json{{"role", to_string(m.role)}, {"content", m.content}}; }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double parse_retry_after(const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size() && d >= 0) return d;
  } catch (const std::exception&) {
  }
  return 0.0;
}

// Header value of a fixture file ("# key: value" lines before the request).
std::map<std::string, std::string> fixture_header(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line) && line.rfind("# ", 0) == 0) {
    const auto colon = line.find(": ");
    if (colon != std::string::npos) out[line.substr(2, colon - 2)] = line.substr(colon + 2);
  }
  return out;
}

std::string prompt_label(const PromptInfo& p) {
  return p.id + " v" + std::to_string(p.version) + " sha256:" + p.sha256;
}

}  // namespace

void validate_request(const ChatRequest& req) {
  if (req.messages.empty()) throw ValidationError("chat request needs at least one message");
  const auto first = req.messages.front().role;
  if (first != ChatRole::system && first != ChatRole::user) {
    throw ValidationError("first chat message must come from system or user");
  }
  if (req.model_id.empty()) throw ValidationError("chat request needs a model id");
  std::set<std::string> names;
  for (const auto& t : req.tools) {
    if (t.name.empty() || !names.insert(t.name).second) {
      throw ValidationError("tool names must be non-empty and unique: '" + t.name + "'");
    }
    if (auto problems = schema::schema_problems(t.parameters); !problems.empty()) {
      throw ValidationError("tool '" + t.name + "' has an unusable schema: " + problems.front());
    }
  }
}

json canonical_request(const ChatRequest& req) {
  json messages = json::array();
  for (const auto& m : req.messages) messages.push_back(message_json(m));
  json tools = json::array();
  for (const auto& t : req.tools) {
    tools.push_back(json{{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}});
  }
  return json{{"model", req.model_id},
              {"messages", messages},
              {"tools", tools},
              {"temperature", codec::num(req.temperature)},
              {"max_tokens", req.max_tokens}};
}

std::string request_hash(const ChatRequest& req) { return sha256_hex(codec::dump(canonical_request(req))); }

json wire_request(const ChatRequest& req) {
  json messages = json::array();
  for (const auto& m : req.messages) messages.push_back(message_json(m));
  json body{{"model", req.model_id},
            {"messages", messages},
            {"temperature", req.temperature},
            {"max_tokens", req.max_tokens}};
  if (!req.tools.empty()) {
    json tools = json::array();
    for (const auto& t : req.tools) {
      tools.push_back(json{{"type", "function"},
                           {"function", {{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}}}});
    }
    body["tools"] = tools;
  }
  return body;
}

ChatResponse parse_wire_response(const std::string& body) {
  try {
    const auto doc = json::parse(body);
    const auto& message = doc.at("choices").at(0).at("message");
    ChatResponse r;
    if (message.contains("content") && message["content"].is_string() && !message["content"].get<std::string>().empty()) {
      r.text = message["content"].get<std::string>();
    }
    if (message.contains("tool_calls") && message["tool_calls"].is_array()) {
      for (const auto& tc : message["tool_calls"]) {
        ToolCall call;
        const auto& fn = tc.at("function");
        call.name = fn.at("name").get<std::string>();
        const auto& args = fn.at("arguments");
        call.raw_arguments = args.is_string() ? args.get<std::string>() : args.dump();
        call.arguments = json::parse(call.raw_arguments, nullptr, false);
        if (call.arguments.is_discarded()) call.arguments = nullptr;
        r.tool_calls.push_back(std::move(call));
      }
    }
    if (doc.contains("usage") && doc["usage"].is_object()) {
      r.usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0);
      r.usage.completion_tokens = doc["usage"].value("completion_tokens", 0);
    }
    if (!r.text && r.tool_calls.empty()) throw ParseError("chat response has neither text nor tool calls", {{"raw", body}});
    return r;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("malformed chat response: ") + e.what(), {{"raw", body}});
  }
}

ParsedToolCall parse_tool_call(const ChatResponse& resp, const ToolSchema& expected) {
  const auto it = std::find_if(resp.tool_calls.begin(), resp.tool_calls.end(),
                               [&](const ToolCall& c) { return c.name == expected.name; });
  if (it == resp.tool_calls.end()) {
    throw MissingToolCallError("model did not call " + expected.name,
                               {{"expected", expected.name}, {"text", resp.text.value_or("")}});
  }
  if (it->arguments.is_null()) {
    throw SchemaViolationError("arguments of " + expected.name + " are not valid JSON",
                               {{"fields", json::array({"arguments"})}, {"raw", it->raw_arguments}});
  }
  try {
    auto c = schema::conform(expected.parameters, it->arguments);
    return {std::move(c.value), std::move(c.warnings), it->raw_arguments};
  } catch (const SchemaViolationError& e) {
    json detail = e.detail();
    detail["raw"] = it->raw_arguments;
    throw SchemaViolationError(e.what(), detail);
  }
}

// --- Modes and config ----------------------------------------------------------

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::live: return "live";
    case Mode::record: return "record";
    case Mode::replay: return "replay";
  }
  return "?";
}

Mode parse_mode(const std::string& name) {
  if (name == "live") return Mode::live;
  if (name == "record") return Mode::record;
  if (name == "replay") return Mode::replay;
  throw ValidationError("unknown LLM mode '" + name + "' (expected live, record or replay)");
}

GatewayConfig GatewayConfig::from_env() {
  GatewayConfig c;
  if (auto m = env("LLM_MODE")) c.mode = parse_mode(*m);
  c.fixtures_dir = env_or("LLM_FIXTURES_DIR", c.fixtures_dir.string());
  c.primary.base_url = env_or("LLM_BASE_URL", c.primary.base_url);
  c.primary.api_key = env_or("LLM_API_KEY", "");
  c.research.base_url = env_or("RESEARCH_LLM_BASE_URL", c.research.base_url);
  c.research.api_key = env_or("RESEARCH_LLM_API_KEY", c.primary.api_key);
  c.models["breakdown"] = env_or("LLM_BREAKDOWN_MODEL", c.models["breakdown"]);
  c.models["researcher"] = env_or("LLM_RESEARCHER_MODEL", c.models["researcher"]);
  return c;
}

std::filesystem::path fixture_path(const std::filesystem::path& dir, const std::string& agent, const std::string& hash) {
  return dir / agent / (hash + ".txt");
}

http::Response HttpChatTransport::post(const Endpoint& endpoint, const std::string& body) {
  http::Headers headers;
  if (!endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint.api_key);
  return http::post(endpoint.base_url, "/chat/completions", body, "application/json", headers, timeout_);
}

// --- Gateway -------------------------------------------------------------------

Gateway::Gateway(GatewayConfig config, std::shared_ptr<ChatTransport> transport, Sleeper sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  if (!transport_) transport_ = std::make_shared<HttpChatTransport>();
}

const std::string& Gateway::model_for(const std::string& role) const {
  auto it = config_.models.find(role);
  if (it == config_.models.end()) throw NotFoundError("no model configured for role '" + role + "'");
  return it->second;
}

ChatResponse Gateway::complete(const ChatRequest& req) {
  validate_request(req);
  const auto hash = request_hash(req);
  if (config_.mode == Mode::replay) return replay(req, hash);
  std::string raw;
  auto resp = call_live(req, raw);
  if (config_.mode == Mode::record) record(req, hash, raw);
  return resp;
}

ChatResponse Gateway::call_live(const ChatRequest& req, std::string& raw_body) {
  const Endpoint& endpoint = req.agent == "researcher" ? config_.research : config_.primary;
  const auto body = wire_request(req).dump();
  for (int attempt = 0;; ++attempt) {
    try {
      ++network_calls_;
      const auto started = std::chrono::steady_clock::now();
      auto resp = transport_->post(endpoint, body);
      if (resp.status < 200 || resp.status >= 300) {
        throw ProviderError(resp.status, "provider answered HTTP " + std::to_string(resp.status),
                            parse_retry_after(resp.header("Retry-After")), {{"status", resp.status}, {"raw", resp.body}});
      }
      auto parsed = parse_wire_response(resp.body);
      parsed.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
      raw_body = resp.body;
      return parsed;
    } catch (const Error& e) {
      if (!e.retryable() || attempt >= config_.max_retries) throw;
      double wait = config_.backoff_seconds.empty()
                        ? 0.0
                        : config_.backoff_seconds[std::min<std::size_t>(attempt, config_.backoff_seconds.size() - 1)];
      if (const auto* pe = dynamic_cast<const ProviderError*>(&e)) wait = std::max(wait, pe->retry_after_seconds());
      sleeper_(wait);
    }
  }
}

ChatResponse Gateway::replay(const ChatRequest& req, const std::string& hash) const {
  const auto path = fixture_path(config_.fixtures_dir, req.agent, hash);
  if (!std::filesystem::exists(path)) {
    std::string message = "no " + req.agent + " fixture for request hash " + hash;
    json detail{{"hash", hash}, {"agent", req.agent}, {"path", path.string()}};
    // A fixture recorded from another revision of the same prompt means the
    // prompt text drifted since recording.
    if (req.prompt && std::filesystem::is_directory(path.parent_path())) {
      for (const auto& entry : std::filesystem::directory_iterator(path.parent_path())) {
        const auto header = fixture_header(read_file(entry.path()));
        const auto it = header.find("prompt");
        if (it == header.end() || it->second.rfind(req.prompt->id + " ", 0) != 0) continue;
        if (it->second != prompt_label(*req.prompt)) {
          message += "; prompt drift: fixtures were recorded with " + it->second + ", current is " +
                     prompt_label(*req.prompt);
          detail["recorded_prompt"] = it->second;
          break;
        }
      }
    }
    throw FixtureMissingError(message, detail);
  }
  const auto text = read_file(path);
  const auto pos = text.find(kResponseMarker);
  if (pos == std::string::npos) throw ParseError("fixture " + path.string() + " has no response section");
  std::string body = text.substr(pos + kResponseMarker.size());
  if (!body.empty() && body.back() == '\n') body.pop_back();
  return parse_wire_response(body);
}

void Gateway::record(const ChatRequest& req, const std::string& hash, const std::string& raw_body) const {
  const auto path = fixture_path(config_.fixtures_dir, req.agent, hash);
  std::filesystem::create_directories(path.parent_path());
  std::ostringstream out;
  out << "# agent: " << req.agent << '\n';
  out << "# model: " << req.model_id << '\n';
  if (req.prompt) out << "# prompt: " << prompt_label(*req.prompt) << '\n';
  out << "# hash: " << hash << '\n';
  out << kRequestMarker << canonical_request(req).dump(1) << kResponseMarker << raw_body << '\n';
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  file << out.str();
  if (!file) throw IoError("cannot write fixture " + path.string());
}

}  // namespace geoanim::llm
