#include "geoanim/scenario.hpp"

#include <fstream>
#include <sstream>

#include "geoanim/codec.hpp"
#include "geoanim/errors.hpp"
#include "geoanim/ids.hpp"

namespace geoanim {
namespace {

using codec::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + path.string(), {{"path", path.string()}});
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string item_id(const Project& p, const json& step) {
  const auto index = step.at("item").get<std::size_t>();
  if (index >= p.breakdown.items.size()) throw ValidationError("scenario step names item " + std::to_string(index) + " of " +
                                                               std::to_string(p.breakdown.items.size()));
  return p.breakdown.items[index].id;
}

}  // namespace

json load_scenarios(const std::filesystem::path& fixtures_root) {
  return json::parse(read_file(fixtures_root / "scenarios.json"));
}

const json& find_scenario(const json& manifest, const std::string& name) {
  for (const auto& s : manifest.at("scenarios")) {
    if (s.at("name") == name) return s;
  }
  throw NotFoundError("no scenario named " + name);
}

ScenarioRun run_scenario(const json& scenario, Runtime& rt, const std::filesystem::path& fixtures_root) {
  const auto script = read_file(fixtures_root / scenario.at("script").get<std::string>());
  const auto options = breakdown_options_from_json(scenario.value("options", json()));
  ScenarioRun run;
  run.project = new_project(script, derived_id("project:" + sha256_hex(script), 0), rt.clock);
  for (const auto& step : scenario.at("steps")) {
    const auto op = step.at("op").get<std::string>();
    if (op == "breakdown") {
      run_breakdown(run.project, rt, options);
    } else if (op == "research") {
      run.research_failures.push_back(run_research(run.project, rt, step.value("force", false)));
    } else if (op == "chat") {
      run.chats.push_back(run_chat(run.project, rt, item_id(run.project, step), step.at("message").get<std::string>()));
    } else if (op == "regenerate") {
      std::vector<ItemEdit> edits;
      for (auto e : step.at("edits")) {
        if (e.contains("item")) {
          e["id"] = item_id(run.project, e);
          e.erase("item");
        }
        edits.push_back(item_edit_from_json(e));
      }
      run_regenerate(run.project, rt, edits);
    } else if (op == "compile") {
      run_compile(run.project, options);
    } else {
      throw ValidationError("unknown scenario step '" + op + "'");
    }
  }
  return run;
}

Runtime replay_runtime(const std::filesystem::path& fixtures_root) {
  llm::GatewayConfig config;
  config.mode = llm::Mode::replay;
  config.fixtures_dir = fixtures_root;
  Runtime rt;
  rt.mode = llm::Mode::replay;
  rt.clock = fixed_clock(kReplayEpochMs);
  rt.gateway = std::make_shared<llm::Gateway>(config);
  rt.geocoder = std::make_shared<Geocoder>(std::make_shared<ReplayGeocoderTransport>(fixtures_root / "geocoder"), nullptr, rt.clock);
  return rt;
}

}  // namespace geoanim
