#pragma once

// Scripted chat transport and provider-shaped reply builders.

#include <deque>
#include <string>
#include <vector>

#include "geoanim/errors.hpp"
#include "geoanim/llm.hpp"

namespace geoanim::testing {

inline std::string tool_reply(const std::string& name, const std::string& args_text) {
  using nlohmann::json;
  json call{{"id", "call_1"}, {"type", "function"}, {"function", {{"name", name}, {"arguments", args_text}}}};
  return json{{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", nullptr}, {"tool_calls", {call}}}}}}},
              {"usage", {{"prompt_tokens", 10}, {"completion_tokens", 5}}}}
      .dump();
}

inline std::string text_reply(const std::string& text) {
  using nlohmann::json;
  return json{{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}}}}}.dump();
}

class ScriptedTransport : public llm::ChatTransport {
 public:
  std::deque<http::Response> replies;
  std::vector<std::string> bodies;
  std::string last_base;

  void push_ok(std::string body) { replies.push_back({200, std::move(body), {}}); }

  http::Response post(const llm::Endpoint& endpoint, const std::string& body) override {
    bodies.push_back(body);
    last_base = endpoint.base_url;
    if (replies.empty()) throw ContractViolation("scripted transport ran out of replies");
    auto r = replies.front();
    replies.pop_front();
    return r;
  }
};

/// Live-mode gateway wired to a scripted transport; no sleeping.
inline llm::Gateway scripted_gateway(std::shared_ptr<ScriptedTransport> t) {
  llm::GatewayConfig cfg;
  cfg.mode = llm::Mode::live;
  return llm::Gateway(cfg, std::move(t), [](double) {});
}

}  // namespace geoanim::testing
