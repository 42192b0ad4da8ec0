#include <doctest.h>

#include <httplib.h>

#include "fake_geocoder.hpp"
#include "fake_llm.hpp"
#include "geoanim/codec.hpp"
#include "geoanim/service.hpp"
#include "support.hpp"

using namespace geoanim;
using namespace geoanim::testing;
using codec::json;
namespace svc = geoanim::service;

namespace {

struct Rig {
  std::shared_ptr<ScriptedTransport> llm = std::make_shared<ScriptedTransport>();
  std::shared_ptr<PlaceTransport> places = std::make_shared<PlaceTransport>();
  std::shared_ptr<ProjectStore> store;
  std::unique_ptr<svc::Service> service;

  explicit Rig(std::filesystem::path root = temp_dir("service")) : store(std::make_shared<ProjectStore>(root)) {
    places->places["London"] = rect(-0.5, 51.3, 0.3, 51.7);
    places->places["Toronto"] = rect(-79.64, 43.58, -79.12, 43.86);
    Runtime rt;
    rt.mode = llm::Mode::replay;  // deterministic ids and clock
    llm::GatewayConfig cfg;
    cfg.mode = llm::Mode::live;
    rt.gateway = std::make_shared<llm::Gateway>(cfg, llm, [](double) {});
    rt.clock = fixed_clock(kReplayEpochMs);
    rt.geocoder = std::make_shared<Geocoder>(places, nullptr, rt.clock);
    service = std::make_unique<svc::Service>(store, rt);
  }

  svc::Response call(const std::string& method, const std::string& path, const json& body = nullptr,
                     std::map<std::string, std::string> query = {}) {
    return service->handle({method, path, std::move(query), body.is_null() ? "" : body.dump()});
  }
};

json body_of(const svc::Response& r) { return json::parse(r.body); }

std::string items_reply(const std::vector<json>& items) { return tool_reply("emit_breakdown", json{{"items", items}}.dump()); }

std::string query_args(const std::string& place) {
  return json{{"action", "query"}, {"query", {{"query", place}}}}.dump();
}

// Creates a project and runs breakdown + research + compile through the API.
std::string compiled_project(Rig& rig) {
  auto created = body_of(rig.call("POST", "/projects", {{"script", "The mace went from London to Toronto."}}));
  const std::string id = created["project"]["id"];
  rig.llm->push_ok(items_reply({{{"kind", "camera_zoom"}, {"short_description", "Zoom to London"}, {"long_description", "Zoom into London"}},
                                {{"kind", "highlight_area"}, {"short_description", "Outline London"}, {"long_description", "Shade London"}}}));
  REQUIRE(rig.call("POST", "/projects/" + id + "/breakdown", {{"revision", 1}}).status == 200);
  rig.llm->push_ok(tool_reply("resolve_geojson", query_args("London")));
  rig.llm->push_ok(tool_reply("resolve_geojson", query_args("London")));
  REQUIRE(rig.call("POST", "/projects/" + id + "/research", {{"revision", 2}}).status == 200);
  auto compiled = rig.call("POST", "/projects/" + id + "/compile", {{"revision", 3}, {"options", {{"target_duration", 10}}}});
  REQUIRE(compiled.status == 200);
  return id;
}

}  // namespace

TEST_SUITE("service") {
TEST_CASE("api errors") {
  CHECK(svc::api_error(NotFoundError("x")).http_status() == 404);
  CHECK(svc::api_error(ConflictError("x")).http_status() == 409);
  CHECK(svc::api_error(ValidationError("x")).code == svc::ApiCode::invalid_input);
  CHECK(svc::api_error(BreakdownFailedError("x")).code == svc::ApiCode::agent_failed);
  CHECK(svc::api_error(ActionFailedError("x")).code == svc::ApiCode::geocode_failed);
  CHECK(svc::api_error(NetworkError("x", {{"service", "geocoder"}})).code == svc::ApiCode::geocode_failed);
  CHECK(svc::api_error(NetworkError("x")).code == svc::ApiCode::agent_failed);
  CHECK(svc::api_error(IoError("disk")).http_status() == 500);
  const auto j = svc::api_error(NotFoundError("gone", {{"id", "p"}})).to_json();
  CHECK(j["code"] == "not_found");
  CHECK(j["message"] == "gone");
  CHECK(j["detail"]["id"] == "p");
}

TEST_CASE("projects") {
  Rig rig;
  CHECK(body_of(rig.call("GET", "/healthz"))["status"] == "ok");

  auto created = rig.call("POST", "/projects", {{"script", "A trip."}});
  CHECK(created.status == 201);
  const auto doc = body_of(created);
  CHECK(doc["revision"] == 1);
  const std::string id = doc["project"]["id"];
  CHECK(id.size() == 26);
  CHECK(doc["project"]["created_ms"] == kReplayEpochMs);

  SUBCASE("replay ids are deterministic per store state") {
    Rig other;
    CHECK(body_of(other.call("POST", "/projects", {{"script", "A trip."}}))["project"]["id"] == id);
    CHECK(body_of(rig.call("POST", "/projects", {{"script", "A trip."}}))["project"]["id"] != id);
  }
  SUBCASE("read, export, delete") {
    CHECK(body_of(rig.call("GET", "/projects/" + id))["project"]["script"] == "A trip.");
    CHECK(rig.call("GET", "/projects/" + id + "/export").body == codec::serialize(rig.store->load(id).project));
    CHECK(rig.call("DELETE", "/projects/" + id).status == 400);
    CHECK(rig.call("DELETE", "/projects/" + id, nullptr, {{"revision", "2"}}).status == 409);
    CHECK(rig.call("DELETE", "/projects/" + id, nullptr, {{"revision", "1"}}).status == 200);
    CHECK(rig.call("GET", "/projects/" + id).status == 404);
  }
  SUBCASE("bad requests") {
    auto missing = rig.call("GET", "/projects/NOPE");
    CHECK(missing.status == 404);
    CHECK(body_of(missing)["code"] == "not_found");
    CHECK(rig.call("POST", "/projects", json::object()).status == 400);
    CHECK(rig.service->handle({"POST", "/projects", {}, "{not json"}).status == 400);
    CHECK(rig.call("GET", "/projects/..%2F").status == 400);
    CHECK(rig.call("GET", "/nowhere").status == 404);
    CHECK(rig.call("PATCH", "/projects/" + id).status == 405);
    CHECK(rig.call("GET", "/projects/" + id + "/frame").status == 400);
    CHECK(rig.call("GET", "/projects/" + id + "/frame", nullptr, {{"t", "-1"}}).status == 400);
    CHECK(rig.call("GET", "/projects/" + id + "/frames", nullptr, {{"fps", "0"}}).status == 400);
  }
}

TEST_CASE("pipeline endpoints") {
  Rig rig;
  const auto id = compiled_project(rig);
  const auto stored = rig.store->load(id);
  CHECK(stored.revision == 4);
  CHECK(stored.project.timeline.blocks.size() == 2);
  CHECK(stored.project.sessions.size() == 2);

  SUBCASE("frame equals the library evaluation") {
    for (const char* t : {"0", "0.25", "3.0", "9.999", "50"}) {
      auto r = rig.call("GET", "/projects/" + id + "/frame", nullptr, {{"t", t}});
      CHECK(r.status == 200);
      CHECK(r.body == codec::dump(sequencer::to_json(sequencer::evaluate(stored.project.timeline, std::stod(t)))));
    }
    auto frames = rig.call("GET", "/projects/" + id + "/frames", nullptr, {{"fps", "10"}});
    CHECK(frames.content_type == "application/x-ndjson");
    CHECK(frames.body == sequencer::export_frames(stored.project.timeline, 10));
  }
  SUBCASE("timeline edits need the current revision") {
    const json edit{{"op", "retime"}, {"id", stored.project.timeline.blocks[1].id}, {"start_time", 1}, {"end_time", 9}};
    const auto before = codec::serialize(rig.store->load(id).project);
    auto stale = rig.call("PUT", "/projects/" + id + "/timeline", {{"edit", edit}, {"revision", 3}});
    CHECK(stale.status == 409);
    CHECK(body_of(stale)["code"] == "conflict");
    CHECK(codec::serialize(rig.store->load(id).project) == before);
    auto ok = rig.call("PUT", "/projects/" + id + "/timeline", {{"edit", edit}, {"revision", 4}});
    CHECK(ok.status == 200);
    CHECK(body_of(ok)["revision"] == 5);
    CHECK(rig.store->load(id).project.timeline.blocks[1].start_time == 1);
    // frames follow the new revision
    CHECK(rig.call("GET", "/projects/" + id + "/frame", nullptr, {{"t", "0.5"}}).body.find("\"overlays\":[]") != std::string::npos);
    auto bad = rig.call("PUT", "/projects/" + id + "/timeline",
                        {{"edit", {{"op", "retime"}, {"id", "nope"}, {"start_time", 1}, {"end_time", 2}}}, {"revision", 5}});
    CHECK(bad.status == 404);
  }
  SUBCASE("chat updates the item and its block") {
    const auto bid = stored.project.breakdown.items[1].id;
    rig.llm->push_ok(tool_reply("resolve_geojson", query_args("Toronto")));
    auto r = rig.call("POST", "/projects/" + id + "/blocks/" + bid + "/chat", {{"message", "Use Toronto"}, {"revision", 4}});
    REQUIRE(r.status == 200);
    CHECK(body_of(r)["updated"] == true);
    const auto after = rig.store->load(id).project;
    CHECK(std::get<HighlightAreaArgs>(after.timeline.find(bid)->args).shape == rig.places->places["Toronto"]);
    rig.llm->push_ok(text_reply("It is in Ontario."));
    auto talk = rig.call("POST", "/projects/" + id + "/blocks/" + bid + "/chat", {{"message", "Where?"}, {"revision", 5}});
    CHECK(body_of(talk)["reply"] == "It is in Ontario.");
    CHECK(body_of(talk)["updated"] == false);
    CHECK(rig.call("POST", "/projects/" + id + "/blocks/nope/chat", {{"message", "x"}, {"revision", 6}}).status == 404);
  }
  SUBCASE("regenerate") {
    const auto keep = stored.project.breakdown.items[0].id;
    rig.llm->push_ok(items_reply({{{"id", keep}, {"kind", "camera_zoom"}, {"short_description", "Zoom"}, {"long_description", "Zoom into London"}}}));
    auto r = rig.call("POST", "/projects/" + id + "/breakdown/regenerate",
                      {{"revision", 4}, {"edits", {{{"op", "delete"}, {"id", stored.project.breakdown.items[1].id}}}}});
    REQUIRE(r.status == 200);
    CHECK(body_of(r)["breakdown"]["items"].size() == 1);
  }
}

TEST_CASE("agent and geocoder failures") {
  Rig rig;
  auto created = body_of(rig.call("POST", "/projects", {{"script", "Somewhere."}}));
  const std::string id = created["project"]["id"];
  rig.llm->push_ok(text_reply("no tools today"));
  rig.llm->push_ok(text_reply("still none"));
  rig.llm->push_ok(text_reply("nope"));
  auto failed = rig.call("POST", "/projects/" + id + "/breakdown", {{"revision", 1}});
  CHECK(failed.status == 502);
  CHECK(body_of(failed)["code"] == "agent_failed");
  CHECK(rig.store->load(id).revision == 1);

  rig.llm->push_ok(items_reply({{{"kind", "highlight_area"}, {"short_description", "Atlantis"}, {"long_description", "Shade Atlantis"}}}));
  REQUIRE(rig.call("POST", "/projects/" + id + "/breakdown", {{"revision", 1}}).status == 200);
  rig.llm->push_ok(tool_reply("resolve_geojson", query_args("Atlantis")));
  rig.llm->push_ok(tool_reply("resolve_geojson", query_args("Atlantis")));
  auto research = rig.call("POST", "/projects/" + id + "/research", {{"revision", 2}});
  CHECK(research.status == 502);
  const auto err = body_of(research);
  CHECK(err["code"] == "agent_failed");
  CHECK(err["detail"]["failures"].size() == 1);
  CHECK(err["detail"]["revision"] == 3);
  const auto project = rig.store->load(id).project;
  CHECK(project.sessions.begin()->second.error.has_value());
  auto blocked = rig.call("POST", "/projects/" + id + "/compile", {{"revision", 3}});
  CHECK(blocked.status == 400);
  CHECK(body_of(blocked)["detail"]["kind"] == "compile_blocked");
}

TEST_CASE("assets") {
  Rig rig;
  const std::string png = std::string("\x89PNG\r\n\x1a\n", 8) + "data";
  auto up = rig.service->handle({"POST", "/assets", {}, png});
  CHECK(up.status == 201);
  auto down = rig.call("GET", "/assets/" + body_of(up)["id"].get<std::string>());
  CHECK(down.body == png);
  CHECK(down.content_type == "image/png");
  CHECK(rig.call("GET", "/assets/0000").status == 404);
}

TEST_CASE("http adapter") {
  Rig rig;
  svc::HttpServer server(*rig.service);
  const int port = server.bind("127.0.0.1", 0);
  server.start();
  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  auto created = client.Post("/projects", R"({"script":"Over HTTP."})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string id = json::parse(created->body)["project"]["id"];
  auto frame = client.Get("/projects/" + id + "/frame?t=0.5");
  REQUIRE(frame);
  CHECK(frame->status == 200);
  CHECK(frame->body == codec::dump(sequencer::to_json(sequencer::evaluate(Timeline{}, 0.5))));
  auto missing = client.Get("/projects/nope");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  server.stop();
}

TEST_CASE("bind address") {
  CHECK(svc::parse_bind_addr("0.0.0.0:9000") == std::pair<std::string, int>{"0.0.0.0", 9000});
  CHECK(svc::parse_bind_addr(":81") == std::pair<std::string, int>{"127.0.0.1", 81});
  CHECK(svc::parse_bind_addr("8080").second == 8080);
  CHECK_THROWS_AS(svc::parse_bind_addr("host:port"), ValidationError);
}
}
