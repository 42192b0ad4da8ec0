#include <doctest.h>

#include <chrono>
#include <fstream>
#include <sstream>

#include "geoanim/codec.hpp"
#include "geoanim/errors.hpp"
#include "geoanim/geometry.hpp"
#include "geoanim/ids.hpp"
#include "geoanim/scenario.hpp"
#include "geoanim/timeline.hpp"
#include "support.hpp"

using namespace geoanim;
using namespace geoanim::testing;
using codec::json;
namespace geo = geoanim::geometry;

namespace {

const std::filesystem::path kFixtures = GEOANIM_TEST_FIXTURES_DIR;

ScenarioRun replay(const std::string& name) {
  static const json manifest = load_scenarios(kFixtures);
  auto rt = replay_runtime(kFixtures);
  return run_scenario(find_scenario(manifest, name), rt, kFixtures);
}

std::string golden(const std::string& name) {
  std::ifstream in(kFixtures / "projects" / (name + ".json"), std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  auto text = out.str();
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

std::vector<BlockKind> kinds(const Project& p) {
  std::vector<BlockKind> out;
  for (const auto& i : p.breakdown.items) out.push_back(i.kind);
  return out;
}

GeoShape lookup(const GeocodeRequest& req) {
  auto rt = replay_runtime(kFixtures);
  return rt.geocoder->geocode_one(req).shape;
}

GeocodeRequest request(std::string q, std::vector<std::string> cc = {}) {
  GeocodeRequest r;
  r.query = std::move(q);
  r.country_codes = std::move(cc);
  return r;
}

}  // namespace

TEST_SUITE("scenarios") {
TEST_CASE("every scenario replays to its golden document") {
  for (const auto& s : load_scenarios(kFixtures)["scenarios"]) {
    const std::string name = s["name"];
    CAPTURE(name);
    CHECK(codec::serialize(replay(name).project) == golden(name));
  }
}

TEST_CASE("ceremonial mace") {
  const auto start = std::chrono::steady_clock::now();
  const auto run = replay("mace");
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 5.0);
  const auto& p = run.project;
  CHECK(kinds(p) == std::vector{BlockKind::camera_zoom, BlockKind::element_route, BlockKind::camera_zoom, BlockKind::highlight_area});
  for (const auto& item : p.breakdown.items) CHECK(item.resolved);
  CHECK(run.research_failures.at(0).empty());
  CHECK_FALSE(validate_timeline(p.timeline).has_errors());
  REQUIRE(p.timeline.blocks.size() == 4);
  CHECK(p.timeline.blocks.back().end_time == doctest::Approx(30.0));

  const auto& highlight = p.breakdown.items[3];
  CHECK(highlight.style.color == "#d62728");
  CHECK(highlight.style.label == "Toronto");
  const auto& toronto = std::get<HighlightAreaArgs>(*highlight.args).shape;
  CHECK(geo::contains(toronto, {43.6532, -79.3832}));
  const auto london = std::get<CameraZoomArgs>(*p.breakdown.items[0].args);
  CHECK(geo::haversine(london.target, {51.5074, -0.1278}) < 10.0);
}

TEST_CASE("regeneration keeps a reordered plan") {
  const auto mace = replay("mace").project;
  const auto run = replay("mace_reorder").project;
  CHECK(kinds(run) == std::vector{BlockKind::element_route, BlockKind::camera_zoom, BlockKind::camera_zoom, BlockKind::highlight_area});
  REQUIRE(run.breakdown.items.size() == 4);
  CHECK(run.breakdown.items[0].id == mace.breakdown.items[1].id);
  CHECK(run.breakdown.items[1].id == mace.breakdown.items[0].id);
  CHECK(run.breakdown.items[2].id == mace.breakdown.items[2].id);
}

TEST_CASE("an explicit zoom level in the notes reaches the block") {
  const auto p = replay("mace_zoom_level").project;
  CHECK(std::get<CameraZoomArgs>(p.timeline.blocks.at(0).args).zoom_level == 10.0);
  CHECK(std::get<CameraZoomArgs>(replay("mace").project.timeline.blocks.at(0).args).zoom_level != 10.0);
}

TEST_CASE("addition: Andhra Pradesh before 2014") {
  const auto p = replay("andhra").project;
  const auto& shape = std::get<HighlightAreaArgs>(*p.breakdown.items.at(1).args).shape;
  const auto ap = lookup(request("Andhra Pradesh, India", {"in"}));
  const auto tg = lookup(request("Telangana, India", {"in"}));
  CHECK(geo::area(shape) == doctest::Approx(geo::area(ap) + geo::area(tg)).epsilon(0.01));
  CHECK(geo::contains(shape, {17.385, 78.4867}));  // Hyderabad
  CHECK(geo::contains(shape, {16.5062, 80.648}));  // Vijayawada
  CHECK(p.sessions.at(p.breakdown.items[1].id).citations.size() == 2);
}

TEST_CASE("reduction through chat: the Rockies without Canada") {
  const auto run = replay("rockies");
  REQUIRE(run.chats.size() == 1);
  CHECK(run.chats[0].updated);
  const auto& shape = std::get<HighlightAreaArgs>(*run.project.breakdown.items.at(1).args).shape;
  for (const auto& poly : shape.polygons) {
    for (const auto& ring : poly) {
      for (const auto& v : ring) CHECK(v.lat <= 49.0 + 1e-9);
    }
  }
  CHECK(geo::contains(shape, {39.74, -106.5}));
  CHECK_FALSE(geo::contains(shape, {51.0, -118.5}));
  CHECK(std::get<HighlightAreaArgs>(run.project.timeline.blocks.at(1).args).shape == shape);
}

TEST_CASE("spatial transition: North Dakota into the Dakotas") {
  const auto p = replay("dakota").project;
  const auto& args = std::get<SpatialTransitionArgs>(p.timeline.blocks.at(1).args);
  const auto nd = lookup(request("North Dakota, United States", {"us"}));
  const auto sd = lookup(request("South Dakota, United States", {"us"}));
  CHECK(geo::area(args.from_shape) == doctest::Approx(geo::area(nd)).epsilon(1e-9));
  CHECK(geo::area(args.to_shape) == doctest::Approx(geo::area(nd) + geo::area(sd)).epsilon(0.01));
  double previous = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const double a = geo::area(geo::morph(args.from_shape, args.to_shape, k / 10.0));
    CHECK(a >= previous);
    previous = a;
  }
}

TEST_CASE("human in the loop: the legislature point") {
  const auto run = replay("legislature");
  REQUIRE(run.chats.size() == 2);
  CHECK(run.chats[0].updated);
  const auto toronto = geo::extent(lookup(request("Toronto, Ontario, Canada", {"ca"}))).box;
  const auto point = std::get<HighlightPointArgs>(*run.chats[0].item.args).point;
  CHECK(toronto.contains(point));
  CHECK(geo::haversine(point, {43.6624, -79.3916}) < 0.1);
  CHECK(std::get<QueryAction>(*run.chats[0].session.chosen_action).request.query == "Ontario Legislative Building, Toronto");

  // A factual question is answered without touching the geometry.
  CHECK_FALSE(run.chats[1].updated);
  CHECK(run.chats[1].reply.find("1893") != std::string::npos);
  CHECK(run.chats[1].item.args == run.chats[0].item.args);
  CHECK(std::get<HighlightPointArgs>(run.project.timeline.blocks.at(1).args).point == point);
}

TEST_CASE("an unresolvable place ends in a recorded error") {
  const auto run = replay("atlantis");
  const auto& item = run.project.breakdown.items.at(0);
  CHECK_FALSE(item.resolved);
  REQUIRE(run.research_failures.at(0).count(item.id) == 1);
  CHECK(run.research_failures[0].at(item.id).find("Atlantis") != std::string::npos);
  CHECK(run.project.sessions.at(item.id).error);
}

TEST_CASE("routes stay within 1 km of the reference traces") {
  const auto routes = json::parse(std::ifstream(kFixtures / "routes.json"));
  for (const auto& r : routes["routes"]) {
    const std::string name = r["scenario"];
    CAPTURE(name);
    const auto p = replay(name).project;
    const auto& path = std::get<ElementRouteArgs>(*p.breakdown.items.at(r["item"].get<std::size_t>()).args).path.path;
    std::vector<GeoPoint> reference;
    for (const auto& pt : r["points"]) reference.push_back({pt[0].get<double>(), pt[1].get<double>()});
    CHECK(route_deviation_km(path, reference) < 1.0);
  }
}

TEST_CASE("recorded geocoder lookups") {
  auto rt = replay_runtime(kFixtures);
  GeocodeRequest avon = request("River Avon", {"gb"});
  avon.viewbox = BoundingBox{{51.3, -2.8}, {51.6, -1.5}};
  avon.bounded = true;
  const auto river = rt.geocoder->geocode_one(avon);
  CHECK(river.shape.kind == ShapeKind::line);
  for (const auto& v : river.shape.path) CHECK(avon.viewbox->contains(v));

  const auto toronto = rt.geocoder->geocode(request("Toronto"));
  REQUIRE_FALSE(toronto.empty());
  CHECK(geo::contains(toronto.front().shape, {43.6532, -79.3832}));
  CHECK(rt.geocoder->geocode(request("Atlantis")).empty());
}

TEST_CASE("replay without a recording names the missing request") {
  auto rt = replay_runtime(kFixtures);
  auto p = new_project("A script nobody recorded.", derived_id("project:unrecorded", 0), rt.clock);
  try {
    run_breakdown(p, rt, {});
    FAIL("expected FixtureMissingError");
  } catch (const FixtureMissingError& e) {
    CHECK(e.detail()["hash"].get<std::string>().size() == 64);
  }
}
}  // TEST_SUITE
