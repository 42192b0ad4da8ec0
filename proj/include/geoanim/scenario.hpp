#pragma once

// Scripted pipeline runs described in JSON, so recorded fixtures can be
// replayed step for step:
//   {"name", "script": "<file relative to the fixtures root>",
//    "options": {...BreakdownOptions},
//    "steps": [{"op": "breakdown"} | {"op": "research"} |
//              {"op": "chat", "item": <index>, "message": "..."} |
//              {"op": "regenerate", "edits": [item edit with "item": <index> instead of "id"]} |
//              {"op": "compile"}]}

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoanim/pipeline.hpp"

namespace geoanim {

struct ScenarioRun {
  Project project;
  std::vector<std::map<std::string, std::string>> research_failures;  // one per research step
  std::vector<ChatOutcome> chats;
};

/// Reads <root>/scenarios.json.
nlohmann::json load_scenarios(const std::filesystem::path& fixtures_root);
const nlohmann::json& find_scenario(const nlohmann::json& manifest, const std::string& name);

ScenarioRun run_scenario(const nlohmann::json& scenario, Runtime& rt, const std::filesystem::path& fixtures_root);

/// Runtime replaying <fixtures_root> (LLM fixtures and <root>/geocoder).
Runtime replay_runtime(const std::filesystem::path& fixtures_root);

}  // namespace geoanim
