// Regenerates the checked-in fixture corpus: scripts, the scenario manifest,
// recorded model and geocoder exchanges, golden projects and reference routes.
// The "model" here is a canned responder and the places are hand-traced
// outlines, so the corpus is reproducible without network access.
//
//   geoanim_author_fixtures <fixtures-dir>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <utility>

#include "geoanim/codec.hpp"
#include "geoanim/errors.hpp"
#include "geoanim/geocoder.hpp"
#include "geoanim/ids.hpp"
#include "geoanim/llm.hpp"
#include "geoanim/pipeline.hpp"
#include "geoanim/scenario.hpp"

using namespace geoanim;
using codec::json;
namespace fs = std::filesystem;

namespace {

// --- Places ------------------------------------------------------------------

GeoShape ring(std::vector<GeoPoint> pts) { return GeoShape::make_polygon(std::move(pts)); }

const std::vector<GeoPoint> kTelanganaBorder = {{15.85, 77.25}, {16.1, 78.2}, {16.3, 79.2}, {16.8, 80.2},
                                                {17.1, 80.9},   {17.6, 81.2}, {17.9, 81.4}};

GeoShape telangana() {
  std::vector<GeoPoint> r = kTelanganaBorder;
  for (GeoPoint p : {GeoPoint{18.8, 80.3}, {19.9, 79.3}, {19.5, 78.0}, {18.4, 77.6}, {17.2, 77.4}}) r.push_back(p);
  return ring(r);
}

GeoShape andhra_pradesh() {
  std::vector<GeoPoint> r = kTelanganaBorder;
  for (GeoPoint p : {GeoPoint{18.9, 84.6}, {17.6, 83.3}, {16.3, 81.7}, {15.7, 80.3}, {14.3, 80.1}, {13.4, 80.3},
                     {13.0, 79.0}, {13.6, 77.5}, {14.8, 77.0}}) {
    r.push_back(p);
  }
  return ring(r);
}

struct Place {
  std::string display_name;
  GeoShape shape;
};

GeocodeRequest req(std::string q, std::vector<std::string> cc = {}) {
  GeocodeRequest r;
  r.query = std::move(q);
  r.country_codes = std::move(cc);
  return r;
}

std::map<std::string, std::vector<Place>> places() {
  const GeoShape london = ring({{51.29, -0.51}, {51.29, 0.15}, {51.38, 0.33}, {51.6, 0.33},
                                {51.69, 0.15},  {51.69, -0.35}, {51.6, -0.51}});
  const GeoShape toronto = ring({{43.58, -79.64}, {43.58, -79.5}, {43.63, -79.36}, {43.67, -79.12},
                                 {43.86, -79.12}, {43.86, -79.64}});
  const GeoShape north_dakota = ring({{45.94, -104.05}, {45.94, -96.56}, {46.6, -96.6}, {47.5, -96.85},
                                      {48.5, -97.15},   {49.0, -97.23},  {49.0, -104.05}});
  const GeoShape south_dakota = ring({{45.94, -104.05}, {42.99, -104.05}, {42.99, -98.5}, {42.48, -96.6},
                                      {43.5, -96.45},   {45.3, -96.45},   {45.94, -96.56}});
  const GeoShape rockies = ring({{35.0, -104.5}, {40.0, -104.8}, {45.0, -107.5}, {49.0, -113.0}, {53.0, -116.5},
                                 {56.0, -121.0}, {56.0, -124.0}, {52.0, -121.0}, {49.0, -116.5}, {45.0, -112.0},
                                 {40.0, -109.5}, {35.0, -107.5}});
  const GeoShape canada = ring({{49.0, -141.0}, {49.0, -95.0}, {70.0, -95.0}, {70.0, -141.0}});
  const GeoShape avon = GeoShape::make_line({{51.49, -2.69}, {51.45, -2.6}, {51.41, -2.48}, {51.38, -2.36}, {51.35, -2.25},
                                             {51.37, -2.13}, {51.43, -2.05}, {51.5, -2.02}, {51.58, -2.08}});
  GeocodeRequest avon_req = req("River Avon", {"gb"});
  avon_req.viewbox = BoundingBox{{51.3, -2.8}, {51.6, -1.5}};
  avon_req.bounded = true;

  std::map<std::string, std::vector<Place>> m;
  auto put = [&](const GeocodeRequest& r, std::vector<Place> found) { m[build_query(r)] = std::move(found); };
  put(req("London, United Kingdom", {"gb"}), {{"London, Greater London, England, United Kingdom", london}});
  put(req("Toronto, Ontario, Canada", {"ca"}), {{"Toronto, Golden Horseshoe, Ontario, Canada", toronto}});
  put(req("Toronto"), {{"Toronto, Golden Horseshoe, Ontario, Canada", toronto}});
  put(req("Ontario Legislative Building, Toronto", {"ca"}),
      {{"Ontario Legislative Building, Queen's Park, Toronto, Ontario, Canada", GeoShape::make_point({43.6624, -79.3916})}});
  put(req("Palos de la Frontera, Spain", {"es"}),
      {{"Palos de la Frontera, Huelva, Andalusia, Spain", GeoShape::make_point({37.2286, -6.8939})}});
  put(req("Andhra Pradesh, India", {"in"}), {{"Andhra Pradesh, India", andhra_pradesh()}});
  put(req("Telangana, India", {"in"}), {{"Telangana, India", telangana()}});
  put(req("North Dakota, United States", {"us"}), {{"North Dakota, United States", north_dakota}});
  put(req("South Dakota, United States", {"us"}), {{"South Dakota, United States", south_dakota}});
  put(req("Rocky Mountains"), {{"Rocky Mountains, North America", rockies}});
  put(req("Canada", {"ca"}), {{"Canada", canada}});
  put(req("Atlantis"), {});
  put(avon_req, {{"River Avon, Bristol, England, United Kingdom", avon}});
  return m;
}

class CannedGeocoder : public GeocoderTransport {
 public:
  std::string fetch(const std::string& query) override {
    static const auto table = places();
    const auto it = table.find(query);
    if (it == table.end()) throw ContractViolation("no canned place for " + query);
    json features = json::array();
    int osm = 1000;
    for (const auto& p : it->second) {
      features.push_back({{"type", "Feature"},
                          {"properties",
                           {{"display_name", p.display_name}, {"importance", 0.75}, {"osm_type", "relation"}, {"osm_id", ++osm}}},
                          {"geometry", codec::geometry_to_geojson(p.shape)}});
    }
    return json{{"type", "FeatureCollection"}, {"features", features}}.dump();
  }
};

// --- Model -------------------------------------------------------------------

json item(const char* kind, const char* short_d, const char* long_d) {
  return {{"kind", kind}, {"short_description", short_d}, {"long_description", long_d}};
}

json lookup(std::string q, std::vector<std::string> cc = {}) {
  json r{{"query", std::move(q)}};
  if (!cc.empty()) r["country_codes"] = cc;
  return r;
}

json query(json request, json params = json::object()) {
  return {{"action", "query"}, {"query", std::move(request)}, {"params", std::move(params)}};
}

json waypoints(const std::vector<GeoPoint>& pts) {
  json out = json::array();
  for (const auto& p : pts) out.push_back({{"lat", p.lat}, {"lon", p.lon}});
  return out;
}

// Scenario name -> breakdown items.
const std::map<std::string, json>& breakdowns() {
  static const std::map<std::string, json> m = {
      {"mace",
       json::array({item("camera_zoom", "Zoom to London", "Open on London, United Kingdom, where the mace is made."),
                    item("element_route", "Sail across the Atlantic",
                         "Draw the sea voyage from London across the Atlantic and up the St. Lawrence to Toronto."),
                    item("camera_zoom", "Zoom to Toronto", "Bring the camera in on Toronto, Ontario, Canada."),
                    item("highlight_area", "Highlight Toronto", "Shade the city of Toronto in red.")})},
      {"columbus",
       json::array({item("camera_zoom", "Zoom to Palos", "Start at the port of Palos de la Frontera in Spain."),
                    item("element_route", "Sail to San Salvador",
                         "Trace the 1492 voyage from Palos by way of the Canary Islands to San Salvador.")})},
      {"andhra",
       json::array({item("camera_zoom", "Zoom to Andhra Pradesh", "Frame the present-day state of Andhra Pradesh, India."),
                    item("highlight_area", "Andhra Pradesh before 2014",
                         "Shade Andhra Pradesh as it was before 2014, with Telangana still part of it.")})},
      {"rockies",
       json::array({item("camera_zoom", "Zoom to the Rockies", "Frame the Rocky Mountains."),
                    item("highlight_area", "Highlight the Rocky Mountains", "Shade the Rocky Mountain range.")})},
      {"dakota",
       json::array({item("camera_zoom", "Zoom to the Dakotas", "Frame North and South Dakota together."),
                    item("element_spatial_transition", "Grow North Dakota into the Dakotas",
                         "Start from North Dakota alone and grow it into the merged North and South Dakota.")})},
      {"legislature",
       json::array({item("camera_zoom", "Zoom to Toronto at street level", "Bring the camera down over Toronto, Ontario."),
                    item("highlight_point", "Mark the mace's home", "Drop a marker where the mace is kept in Toronto.")})},
      {"atlantis", json::array({item("highlight_area", "Highlight Atlantis", "Shade the lost city of Atlantis.")})},
  };
  return m;
}

// (step, last user message) -> reply. "" is the first turn, "repair" any repair prompt.
using Reply = std::pair<bool, json>;  // {is_tool, payload}

Reply tool(json args) { return {true, std::move(args)}; }
Reply text(std::string s) { return {false, std::move(s)}; }

const std::vector<GeoPoint> kMaceRoute = {{51.5072, -0.1276}, {49.9123, -5.5021}, {50.0047, -20.0113}, {48.5231, -38.0087},
                                          {47.0154, -52.0342}, {47.3066, -60.0019}, {49.2148, -66.0125}, {46.8139, -71.2082},
                                          {45.5017, -73.5673}, {44.2312, -76.4860}, {43.6426, -79.3871}};
const std::vector<GeoPoint> kColumbusRoute = {{37.2286, -6.8939}, {28.1235, -15.4363}, {27.5082, -30.0171},
                                              {26.4963, -45.0045}, {25.5019, -60.0158}, {24.0521, -74.5284}};

const std::map<std::pair<std::string, std::string>, Reply>& replies() {
  static const std::map<std::pair<std::string, std::string>, Reply> m = {
      {{"Zoom to London", ""}, tool(query(lookup("London, United Kingdom", {"GB"})))},
      {{"Sail across the Atlantic", ""},
       tool({{"action", "generation"},
             {"waypoints", waypoints(kMaceRoute)},
             {"mode", "sea"},
             {"params", {{"sprite", "ship"}, {"label", "The mace crosses the Atlantic"}, {"color", "#1f77b4"}}}})},
      {{"Zoom to Toronto", ""}, tool(query(lookup("Toronto, Ontario, Canada", {"ca"})))},
      {{"Highlight Toronto", ""},
       tool(query(lookup("Toronto, Ontario, Canada", {"ca"}), {{"color", "#d62728"}, {"label", "Toronto"}, {"opacity", 0.6}}))},
      {{"Zoom to Palos", ""}, tool(query(lookup("Palos de la Frontera, Spain", {"es"}), {{"zoom_level", 8}}))},
      {{"Sail to San Salvador", ""},
       tool({{"action", "generation"},
             {"waypoints", waypoints(kColumbusRoute)},
             {"mode", "sea"},
             {"params", {{"sprite", "ship"}, {"label", "First voyage, 1492"}}}})},
      {{"Zoom to Andhra Pradesh", ""}, tool(query(lookup("Andhra Pradesh, India", {"in"})))},
      {{"Andhra Pradesh before 2014", ""},
       tool({{"action", "addition"},
             {"sub_queries", {lookup("Andhra Pradesh, India", {"in"}), lookup("Telangana, India", {"in"})}},
             {"params", {{"label", "Andhra Pradesh (until 2014)"}, {"color", "#ff7f0e"}, {"opacity", 0.5}}}})},
      {{"Zoom to the Rockies", ""}, tool(query(lookup("Rocky Mountains")))},
      {{"Highlight the Rocky Mountains", ""}, tool(query(lookup("Rocky Mountains"), {{"color", "#8c564b"}, {"opacity", 0.5}}))},
      {{"Highlight the Rocky Mountains", "remove the Canadian part"},
       tool({{"action", "reduction"},
             {"base", lookup("Rocky Mountains")},
             {"mask", lookup("Canada", {"ca"})},
             {"params", {{"color", "#8c564b"}, {"opacity", 0.5}, {"label", "Rocky Mountains (United States)"}}}})},
      {{"Zoom to the Dakotas", ""},
       tool({{"action", "addition"},
             {"sub_queries", {lookup("North Dakota, United States", {"us"}), lookup("South Dakota, United States", {"us"})}}})},
      {{"Grow North Dakota into the Dakotas", ""},
       tool({{"action", "addition"},
             {"sub_queries", {lookup("North Dakota, United States", {"us"}), lookup("South Dakota, United States", {"us"})}},
             {"from", query(lookup("North Dakota, United States", {"us"}))},
             {"params", {{"color", "#2ca02c"}, {"opacity", 0.55}}}})},
      {{"Zoom to Toronto at street level", ""}, tool(query(lookup("Toronto, Ontario, Canada", {"ca"}), {{"zoom_level", 12}}))},
      {{"Mark the mace's home", ""}, tool(query(lookup("Toronto, Ontario, Canada", {"ca"}), {{"label", "Toronto"}}))},
      {{"Mark the mace's home", "Where is the ceremonial mace housed in Toronto?"},
       tool(query(lookup("Ontario Legislative Building, Toronto", {"ca"}),
                  {{"label", "Ontario Legislative Building"}, {"color", "#9467bd"}}))},
      {{"Mark the mace's home", "When was that building finished?"},
       text("The Ontario Legislative Building at Queen's Park opened in 1893.")},
      {{"Highlight Atlantis", ""}, tool(query(lookup("Atlantis")))},
      {{"Highlight Atlantis", "repair"},
       text("Atlantis is a legendary island with no surveyed location, so there is no outline to retrieve.")},
  };
  return m;
}

std::string line_of(const std::string& text, const std::string& prefix) {
  const auto at = text.find(prefix);
  if (at == std::string::npos) return {};
  const auto start = at + prefix.size();
  return text.substr(start, text.find('\n', start) - start);
}

std::string wire_reply(const Reply& r, const std::string& tool_name) {
  json message{{"role", "assistant"}};
  if (r.first) {
    message["content"] = nullptr;
    message["tool_calls"] = {{{"id", "call_0"},
                              {"type", "function"},
                              {"function", {{"name", tool_name}, {"arguments", r.second.dump()}}}}};
  } else {
    message["content"] = r.second;
  }
  return json{{"choices", {{{"index", 0}, {"message", message}, {"finish_reason", "stop"}}}},
              {"usage", {{"prompt_tokens", 0}, {"completion_tokens", 0}}}}
      .dump();
}

class CannedModel : public llm::ChatTransport {
 public:
  http::Response post(const llm::Endpoint&, const std::string& body) override {
    const auto doc = json::parse(body);
    const std::string name = doc.at("tools").at(0).at("function").at("name");
    const auto& messages = doc.at("messages");
    const std::string first = messages.at(1).at("content");
    if (name == "emit_breakdown") return {200, wire_reply(tool({{"items", breakdown_for(first)}}), name), {}};

    const std::string step = line_of(first, "Step: ");
    std::string last;
    if (messages.size() > 2) {
      last = messages.back().at("content");
      if (last.rfind("That did not work:", 0) == 0) last = "repair";
    }
    const auto it = replies().find({step, last});
    if (it == replies().end()) throw ContractViolation("no canned reply for step '" + step + "' / '" + last + "'");
    return {200, wire_reply(it->second, name), {}};
  }

 private:
  static json breakdown_for(const std::string& user) {
    const std::string script_tag = "Script:\n";
    if (user.rfind(script_tag, 0) == 0) {
      const auto script = user.substr(script_tag.size());
      for (const auto& [name, items] : breakdowns()) {
        if (script.find(scripts().at(name)) != std::string::npos) return items;
      }
      throw ContractViolation("no canned breakdown for script");
    }
    // Regeneration: follow the writer's edited plan as given.
    const std::string plan_tag = "Current plan, in order (JSON):\n";
    const auto start = user.find(plan_tag);
    if (start == std::string::npos) throw ContractViolation("unrecognised breakdown request");
    const auto begin = start + plan_tag.size();
    const auto end = user.find("\n\nKeep the", begin);
    json out = json::array();
    for (const auto& it : json::parse(user.substr(begin, end - begin))) {
      out.push_back({{"id", it.at("id")},
                     {"kind", it.at("kind")},
                     {"short_description", it.at("short_description")},
                     {"long_description", it.at("long_description")}});
    }
    return out;
  }

 public:
  static const std::map<std::string, std::string>& scripts() {
    static const std::map<std::string, std::string> m = {
        {"mace",
         "A ceremonial mace is made by a silversmith in London. It is crated, loaded onto a ship and carried across "
         "the Atlantic, up the St. Lawrence and across Lake Ontario to Toronto, where it is presented to the "
         "province's legislature."},
        {"columbus",
         "In August 1492 three ships leave Palos in Spain, stop in the Canary Islands and sail west for five weeks "
         "until they reach an island the crew names San Salvador."},
        {"andhra",
         "Before 2014 the Indian state of Andhra Pradesh also covered the region that is now Telangana. Show the "
         "state as it was then."},
        {"rockies", "The Rocky Mountains run from New Mexico far into western Canada."},
        {"dakota",
         "North Dakota and South Dakota were admitted on the same day in 1889. Show North Dakota first, then let it "
         "grow into the two states together."},
        {"legislature", "In Toronto the mace is kept in the building where the province's parliament sits."},
        {"atlantis", "Some stories place the lost city of Atlantis beyond the Pillars of Hercules."},
    };
    return m;
  }
};

// --- Manifest ----------------------------------------------------------------

json scenarios() {
  auto s = [](const char* name, const char* script, json steps, double duration = 30.0) {
    return json{{"name", name},
                {"script", std::string("scripts/") + script + ".txt"},
                {"options", {{"target_duration", duration}}},
                {"steps", std::move(steps)}};
  };
  const json breakdown{{"op", "breakdown"}}, research{{"op", "research"}}, compile{{"op", "compile"}};
  return json::array({
      s("mace", "mace", {breakdown, research, compile}),
      s("mace_reorder", "mace", {breakdown, {{"op", "regenerate"}, {"edits", {{{"op", "move"}, {"item", 1}, {"index", 0}}}}}}),
      s("mace_zoom_level", "mace",
        {breakdown,
         research,
         {{"op", "regenerate"},
          {"edits",
           {{{"op", "update"}, {"item", 0}, {"long_description", "Open on London, United Kingdom, at zoom level 10."}}}}},
         {{"op", "research"}, {"force", true}},
         compile}),
      s("columbus", "columbus", {breakdown, research, compile}, 20.0),
      s("andhra", "andhra", {breakdown, research, compile}, 12.0),
      s("rockies", "rockies",
        {breakdown, research, {{"op", "chat"}, {"item", 1}, {"message", "remove the Canadian part"}}, compile}, 12.0),
      s("dakota", "dakota", {breakdown, research, compile}, 12.0),
      s("legislature", "legislature",
        {breakdown,
         research,
         {{"op", "chat"}, {"item", 1}, {"message", "Where is the ceremonial mace housed in Toronto?"}},
         {{"op", "chat"}, {"item", 1}, {"message", "When was that building finished?"}},
         compile},
        12.0),
      s("atlantis", "atlantis", {breakdown, research}, 8.0),
  });
}

// Reference polylines traced independently at two-decimal precision.
json reference_routes() {
  auto rounded = [](const std::vector<GeoPoint>& pts) {
    json out = json::array();
    for (const auto& p : pts) out.push_back({std::round(p.lat * 100) / 100, std::round(p.lon * 100) / 100});
    return out;
  };
  return json{{"routes",
               {{{"scenario", "mace"}, {"item", 1}, {"points", rounded(kMaceRoute)}},
                {{"scenario", "columbus"}, {"item", 1}, {"points", rounded(kColumbusRoute)}}}}};
}

void write(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: geoanim_author_fixtures <fixtures-dir>\n";
    return 2;
  }
  const fs::path root = argv[1];
  try {
    for (const char* sub : {"breakdown", "researcher", "geocoder", "projects", "scripts"}) fs::remove_all(root / sub);
    for (const auto& [name, text] : CannedModel::scripts()) write(root / "scripts" / (name + ".txt"), text + "\n");
    const json manifest{{"scenarios", scenarios()}};
    write(root / "scenarios.json", manifest.dump(2) + "\n");
    write(root / "routes.json", reference_routes().dump(2) + "\n");

    llm::GatewayConfig config;
    config.mode = llm::Mode::record;
    config.fixtures_dir = root;
    Runtime rec;
    rec.mode = llm::Mode::record;
    rec.clock = fixed_clock(kReplayEpochMs);
    rec.gateway = std::make_shared<llm::Gateway>(config, std::make_shared<CannedModel>(), [](double) {});
    rec.geocoder = std::make_shared<Geocoder>(
        std::make_shared<RecordingGeocoderTransport>(std::make_shared<CannedGeocoder>(), root / "geocoder"), nullptr, rec.clock);

    // Lookups exercised directly by the geocoder tests.
    GeocodeRequest avon = req("River Avon", {"gb"});
    avon.viewbox = BoundingBox{{51.3, -2.8}, {51.6, -1.5}};
    avon.bounded = true;
    for (const auto& r : {avon, req("Toronto"), req("Atlantis")}) rec.geocoder->geocode(r);

    for (const auto& scenario : manifest["scenarios"]) {
      const auto recorded = run_scenario(scenario, rec, root);
      auto replay = replay_runtime(root);
      const auto replayed = run_scenario(scenario, replay, root);
      const auto doc = codec::serialize(recorded.project);
      if (doc != codec::serialize(replayed.project)) {
        throw ContractViolation("replay of " + scenario["name"].get<std::string>() + " differs from the recording");
      }
      write(root / "projects" / (scenario["name"].get<std::string>() + ".json"), doc + "\n");
      std::cout << scenario["name"].get<std::string>() << ": " << recorded.project.breakdown.items.size() << " items\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
