#pragma once

// Pipeline steps over a Project, shared by the service and the CLI, plus the
// environment-driven wiring of the gateway and geocoder.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoanim/breakdown.hpp"
#include "geoanim/geocoder.hpp"
#include "geoanim/llm.hpp"
#include "geoanim/model.hpp"
#include "geoanim/researcher.hpp"
#include "geoanim/runtime.hpp"

namespace geoanim {

/// Clock used when fixtures drive the run, so documents are byte-stable.
inline constexpr std::int64_t kReplayEpochMs = 1700000000000;

struct Runtime {
  llm::Mode mode = llm::Mode::replay;
  std::shared_ptr<llm::Gateway> gateway;
  std::shared_ptr<Geocoder> geocoder;
  Clock clock;
};

/// Gateway from LLM_* variables (mode overridable); geocoder transport follows
/// the same mode with fixtures in <fixtures_dir>/geocoder. Live mode caches
/// lookups in <data_dir>/geocoder_cache.jsonl. Replay uses a fixed clock.
Runtime make_runtime(std::optional<llm::Mode> mode, const std::filesystem::path& data_dir);

/// New project; ids come from `id` when given, otherwise a fresh ULID.
Project new_project(const std::string& script, std::string id, const Clock& clock);

/// Replaces the breakdown and drops research sessions.
void run_breakdown(Project& project, Runtime& rt, const BreakdownOptions& options);

void run_regenerate(Project& project, Runtime& rt, const std::vector<ItemEdit>& edits);

/// Researches unresolved items (all items with `force`). Failed items keep
/// their session with the error; the map holds item id -> error.
std::map<std::string, std::string> run_research(Project& project, Runtime& rt, bool force = false);

/// Chat about one item; on update the matching timeline block (same id)
/// takes the new args and style.
ChatOutcome run_chat(Project& project, Runtime& rt, const std::string& item_id, const std::string& message);

void run_compile(Project& project, const BreakdownOptions& options);

BreakdownOptions breakdown_options_from_json(const nlohmann::json& j);
ItemEdit item_edit_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ItemEdit& edit);

}  // namespace geoanim
