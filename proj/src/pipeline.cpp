#include "geoanim/pipeline.hpp"

#include "geoanim/codec.hpp"
#include "geoanim/errors.hpp"
#include "geoanim/ids.hpp"
#include "geoanim/timeline.hpp"

namespace geoanim {
namespace {

using codec::json;

void drop_stale_sessions(Project& project) {
  for (const auto& id : dangling_sessions(project)) project.sessions.erase(id);
}

}  // namespace

Runtime make_runtime(std::optional<llm::Mode> mode, const std::filesystem::path& data_dir) {
  auto config = llm::GatewayConfig::from_env();
  if (mode) config.mode = *mode;
  Runtime rt;
  rt.mode = config.mode;
  const auto geo_config = GeocoderConfig::from_env();
  const auto geo_fixtures = config.fixtures_dir / "geocoder";
  std::shared_ptr<GeocoderTransport> transport;
  std::shared_ptr<GeocodeCache> cache;
  switch (config.mode) {
    case llm::Mode::replay:
      transport = std::make_shared<ReplayGeocoderTransport>(geo_fixtures);
      rt.clock = fixed_clock(kReplayEpochMs);
      break;
    case llm::Mode::record:
      transport = std::make_shared<RecordingGeocoderTransport>(
          std::make_shared<LiveGeocoderTransport>(geo_config.base_url, geo_config.user_agent), geo_fixtures);
      rt.clock = system_clock();
      break;
    case llm::Mode::live:
      transport = std::make_shared<LiveGeocoderTransport>(geo_config.base_url, geo_config.user_agent);
      std::filesystem::create_directories(data_dir);
      cache = std::make_shared<GeocodeCache>(data_dir / "geocoder_cache.jsonl", geo_config.cache_ttl_hours);
      rt.clock = system_clock();
      break;
  }
  rt.gateway = std::make_shared<llm::Gateway>(config);
  rt.geocoder = std::make_shared<Geocoder>(transport, cache, rt.clock);
  return rt;
}

Project new_project(const std::string& script, std::string id, const Clock& clock) {
  Project p;
  p.id = id.empty() ? new_ulid() : std::move(id);
  p.script = script;
  p.created_ms = p.modified_ms = clock();
  return p;
}

void run_breakdown(Project& project, Runtime& rt, const BreakdownOptions& options) {
  BreakdownAgent agent(*rt.gateway);
  project.breakdown = agent.breakdown(project.script, options);
  project.sessions.clear();
  drop_stale_sessions(project);
  project.modified_ms = rt.clock();
}

void run_regenerate(Project& project, Runtime& rt, const std::vector<ItemEdit>& edits) {
  if (project.breakdown.items.empty()) throw PreconditionError("project has no breakdown to regenerate");
  BreakdownAgent agent(*rt.gateway);
  project.breakdown = agent.regenerate(project.breakdown, edits, project.script);
  drop_stale_sessions(project);
  project.modified_ms = rt.clock();
}

std::map<std::string, std::string> run_research(Project& project, Runtime& rt, bool force) {
  if (project.breakdown.items.empty()) throw PreconditionError("project has no breakdown to research");
  ResearcherAgent agent(*rt.gateway, *rt.geocoder);
  std::map<std::string, std::string> failures;
  for (auto& item : project.breakdown.items) {
    if (item.resolved && item.args && !force) continue;
    auto out = agent.research_block(item, project.breakdown);
    if (out.session.error) failures[item.id] = *out.session.error;
    item = std::move(out.item);
    project.sessions[item.id] = std::move(out.session);
  }
  project.modified_ms = rt.clock();
  return failures;
}

ChatOutcome run_chat(Project& project, Runtime& rt, const std::string& item_id, const std::string& message) {
  auto* item = project.breakdown.find(item_id);
  if (!item) throw NotFoundError("no breakdown item " + item_id, {{"id", item_id}});
  ResearchSession session;
  if (auto it = project.sessions.find(item_id); it != project.sessions.end()) {
    session = it->second;
  } else {
    session.block_id = item_id;
  }
  ResearcherAgent agent(*rt.gateway, *rt.geocoder);
  auto out = agent.chat(session, *item, message);
  *item = out.item;
  project.sessions[item_id] = out.session;
  if (out.updated && out.item.args && project.timeline.find(item_id)) {
    project.timeline = apply_edit(project.timeline, edits::UpdateArgs{item_id, *out.item.args});
    project.timeline = apply_edit(project.timeline, edits::UpdateStyle{item_id, out.item.style});
  }
  project.modified_ms = rt.clock();
  return out;
}

void run_compile(Project& project, const BreakdownOptions& options) {
  const auto style = project.timeline.map_style;
  project.timeline = compile(project.breakdown, options, &project.script);
  project.timeline.map_style = style;
  drop_stale_sessions(project);
}

BreakdownOptions breakdown_options_from_json(const json& j) {
  BreakdownOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) throw ValidationError("options must be an object");
  try {
    o.target_duration = j.value("target_duration", o.target_duration);
    o.default_block_seconds = j.value("default_block_seconds", o.default_block_seconds);
    o.camera_lead_seconds = j.value("camera_lead_seconds", o.camera_lead_seconds);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("options: ") + e.what());
  }
  o.validate();
  return o;
}

ItemEdit item_edit_from_json(const json& j) {
  try {
    const auto op = j.at("op").get<std::string>();
    if (op == "delete") return item_edits::Delete{j.at("id").get<std::string>()};
    if (op == "move") return item_edits::Move{j.at("id").get<std::string>(), j.at("index").get<std::size_t>()};
    if (op == "update") {
      item_edits::Update u{j.at("id").get<std::string>(), std::nullopt, std::nullopt, std::nullopt, std::nullopt};
      if (j.contains("kind")) {
        u.kind = parse_block_kind(j["kind"].get<std::string>());
        if (!u.kind) throw ValidationError("unknown block kind " + j["kind"].dump());
      }
      if (j.contains("short_description")) u.short_description = j["short_description"].get<std::string>();
      if (j.contains("long_description")) u.long_description = j["long_description"].get<std::string>();
      if (j.contains("user_notes")) u.user_notes = j["user_notes"].get<std::string>();
      return u;
    }
    if (op == "insert") {
      item_edits::Insert ins{codec::item_from_json(j.at("item")), std::nullopt};
      if (j.contains("index") && !j["index"].is_null()) ins.index = j["index"].get<std::size_t>();
      return ins;
    }
    throw ValidationError("unknown item edit op '" + op + "'");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("item edit: ") + e.what());
  }
}

json to_json(const ItemEdit& edit) {
  return std::visit(
      [](const auto& e) -> json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, item_edits::Delete>) {
          return {{"op", "delete"}, {"id", e.id}};
        } else if constexpr (std::is_same_v<T, item_edits::Move>) {
          return {{"op", "move"}, {"id", e.id}, {"index", e.index}};
        } else if constexpr (std::is_same_v<T, item_edits::Update>) {
          json j{{"op", "update"}, {"id", e.id}};
          if (e.kind) j["kind"] = to_string(*e.kind);
          if (e.short_description) j["short_description"] = *e.short_description;
          if (e.long_description) j["long_description"] = *e.long_description;
          if (e.user_notes) j["user_notes"] = *e.user_notes;
          return j;
        } else {
          json j{{"op", "insert"}, {"item", codec::to_json(e.item)}};
          if (e.index) j["index"] = *e.index;
          return j;
        }
      },
      edit);
}

}  // namespace geoanim
