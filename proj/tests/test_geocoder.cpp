#include <doctest.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>

#include "geoanim/codec.hpp"
#include "geoanim/errors.hpp"
#include "geoanim/geocoder.hpp"
#include "geoanim/geometry.hpp"
#include "geoanim/ids.hpp"
#include "stub_server.hpp"
#include "support.hpp"

using namespace geoanim;
using namespace geoanim::testing;
using codec::json;

namespace {

json feature(const std::string& name, double importance, const GeoShape& shape) {
  return json{{"type", "Feature"},
              {"properties", {{"display_name", name}, {"importance", importance}, {"osm_type", "relation"}, {"osm_id", 42}}},
              {"geometry", codec::geometry_to_geojson(shape)}};
}

std::string collection(std::vector<json> features) {
  return json{{"type", "FeatureCollection"}, {"features", features}}.dump();
}

class CountingTransport : public GeocoderTransport {
 public:
  explicit CountingTransport(std::string body) : body_(std::move(body)) {}
  std::string fetch(const std::string& query) override {
    ++calls;
    last_query = query;
    return body_;
  }
  int calls = 0;
  std::string last_query;

 private:
  std::string body_;
};

}  // namespace

TEST_SUITE("geocoder") {

TEST_CASE("build_query") {
  GeocodeRequest avon{"River Avon", {"gb"}, BoundingBox{{51.3, -2.8}, {51.6, -1.5}}, true, true};
  CHECK(build_query(avon) ==
        "q=River+Avon&format=geojson&polygon_geojson=1&countrycodes=gb&viewbox=-2.8,51.3,-1.5,51.6&bounded=1");
  CHECK(build_query(GeocodeRequest{"Toronto"}) == "q=Toronto&format=geojson&polygon_geojson=1");
  CHECK(build_query(avon) == build_query(avon));

  GeocodeRequest no_poly{"Toronto"};
  no_poly.want_polygon = false;
  CHECK(build_query(no_poly) == "q=Toronto&format=geojson");

  CHECK(build_query(GeocodeRequest{"Québec, Canada & co"}) ==
        "q=Qu%C3%A9bec%2C+Canada+%26+co&format=geojson&polygon_geojson=1");
  CHECK(build_query(GeocodeRequest{"Dakota", {"us", "ca"}}) ==
        "q=Dakota&format=geojson&polygon_geojson=1&countrycodes=us,ca");

  CHECK_THROWS_AS(build_query(GeocodeRequest{""}), ValidationError);
  CHECK_THROWS_AS(build_query(GeocodeRequest{"   "}), ValidationError);
  CHECK_THROWS_AS(build_query(GeocodeRequest{"x", {"GB"}}), ValidationError);
  CHECK_THROWS_AS(build_query(GeocodeRequest{"x", {"gbr"}}), ValidationError);
}

TEST_CASE("parse_results") {
  SUBCASE("sorted by importance, all geometry kinds") {
    auto body = collection({feature("low", 0.2, GeoShape::make_point({1, 2})),
                            feature("high", 0.9, rect(0, 0, 1, 1)),
                            feature("mid", 0.5, GeoShape::make_line({{0, 0}, {1, 1}}))});
    auto r = parse_results(body, 123);
    REQUIRE(r.size() == 3);
    CHECK(r[0].display_name == "high");
    CHECK(r[1].display_name == "mid");
    CHECK(r[2].display_name == "low");
    CHECK(r[0].osm_id == "42");
    CHECK(r[0].fetched_at == 123);
    CHECK(r[0].shape.kind == ShapeKind::polygon);
  }
  SUBCASE("empty result array") { CHECK(parse_results(collection({}), 0).empty()); }
  SUBCASE("malformed body keeps the payload") {
    try {
      parse_results("<html>busy</html>", 0);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.detail()["raw"] == "<html>busy</html>");
    }
  }
  SUBCASE("unsupported geometry") {
    json mls{{"type", "Feature"},
             {"properties", {{"display_name", "river"}}},
             {"geometry", {{"type", "MultiLineString"}, {"coordinates", json::array()}}}};
    CHECK_THROWS_AS(parse_results(collection({mls}), 0), UnsupportedGeometryError);
    auto mixed = parse_results(collection({mls, feature("ok", 0.1, GeoShape::make_point({0, 0}))}), 0);
    CHECK(mixed.size() == 1);
  }
}

TEST_CASE("select_best") {
  std::vector<GeocodeResult> rs(3);
  rs[0] = {"b", rect(0, 0, 1, 1), 0.5, "", "", 0};
  rs[1] = {"a", rect(0, 0, 2, 2), 0.5, "", "", 0};
  rs[2] = {"c", GeoShape::make_point({0, 0}), 0.4, "", "", 0};
  CHECK(select_best(rs).display_name == "a");
  rs[1].shape = rect(0, 0, 1, 1);
  CHECK(select_best(rs).display_name == "a");  // equal area: lexicographic
  rs[2].importance = 0.6;
  CHECK(select_best(rs).display_name == "c");
  CHECK_THROWS_AS(select_best({}), NotFoundError);
}

TEST_CASE("cache") {
  const auto dir = temp_dir("geocache");
  std::int64_t now = 1'000'000;
  auto clock = [&now] { return now; };
  const auto body = collection({feature("Toronto", 0.8, rect(-79.6, 43.58, -79.1, 43.85))});

  SUBCASE("repeat within TTL performs no transport call") {
    auto transport = std::make_shared<CountingTransport>(body);
    Geocoder g(transport, std::make_shared<GeocodeCache>(dir / "cache.jsonl", 24.0, clock), clock);
    auto first = g.geocode(GeocodeRequest{"Toronto"});
    auto second = g.geocode(GeocodeRequest{"Toronto"});
    CHECK(transport->calls == 1);
    CHECK(first == second);
    CHECK(transport->last_query == "q=Toronto&format=geojson&polygon_geojson=1");
  }
  SUBCASE("entries expire and persist across instances") {
    auto transport = std::make_shared<CountingTransport>(body);
    {
      Geocoder g(transport, std::make_shared<GeocodeCache>(dir / "cache.jsonl", 1.0, clock), clock);
      g.geocode(GeocodeRequest{"Toronto"});
    }
    Geocoder reopened(transport, std::make_shared<GeocodeCache>(dir / "cache.jsonl", 1.0, clock), clock);
    reopened.geocode(GeocodeRequest{"Toronto"});
    CHECK(transport->calls == 1);
    now += 3'600'001;
    reopened.geocode(GeocodeRequest{"Toronto"});
    CHECK(transport->calls == 2);
  }
  SUBCASE("malformed responses are not cached") {
    auto bad = std::make_shared<CountingTransport>("oops");
    Geocoder g(bad, std::make_shared<GeocodeCache>(dir / "bad.jsonl", 24.0, clock), clock);
    CHECK_THROWS_AS(g.geocode(GeocodeRequest{"x"}), ParseError);
    CHECK_THROWS_AS(g.geocode(GeocodeRequest{"x"}), ParseError);
    CHECK(bad->calls == 2);
  }
  SUBCASE("geocode_one on zero results") {
    Geocoder g(std::make_shared<CountingTransport>(collection({})));
    CHECK(g.geocode(GeocodeRequest{"Atlantis"}).empty());
    CHECK_THROWS_AS(g.geocode_one(GeocodeRequest{"Atlantis"}), NotFoundError);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("replay and record transports") {
  const auto dir = temp_dir("geofix");
  const auto body = collection({feature("Somewhere", 0.3, GeoShape::make_point({5, 6}))});
  auto inner = std::make_shared<CountingTransport>(body);
  RecordingGeocoderTransport rec(inner, dir);
  const std::string q = build_query(GeocodeRequest{"Somewhere"});
  rec.fetch(q);
  CHECK(std::filesystem::exists(geocoder_fixture_path(dir, q)));
  ReplayGeocoderTransport replay(dir);
  CHECK(parse_results(replay.fetch(q), 0) == parse_results(body, 0));
  try {
    replay.fetch("q=Elsewhere&format=geojson");
    FAIL("expected FixtureMissingError");
  } catch (const FixtureMissingError& e) {
    CHECK(e.detail()["hash"] == sha256_hex("q=Elsewhere&format=geojson"));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("live transport against a stub server") {
  StubServer stub;
  std::mutex m;
  std::vector<std::chrono::steady_clock::time_point> starts;
  std::string agent, query;
  stub.server().Get("/search", [&](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard lock(m);
      starts.push_back(std::chrono::steady_clock::now());
      agent = req.get_header_value("User-Agent");
      query = req.target;
    }
    if (req.get_param_value("q") == "fail") {
      res.status = 503;
      return;
    }
    res.set_content(collection({feature("Stub", 0.5, GeoShape::make_point({1, 1}))}), "application/json");
  });
  stub.start();

  RateGate gate(std::chrono::milliseconds(1000));
  LiveGeocoderTransport live(stub.url(), "geoanim-tests/1.0", gate);

  SUBCASE("user agent, query and rate limiting under concurrency") {
    std::vector<std::thread> threads;
    for (int i = 0; i < 3; ++i) threads.emplace_back([&] { live.fetch(build_query(GeocodeRequest{"New York"})); });
    for (auto& t : threads) t.join();
    CHECK(agent == "geoanim-tests/1.0");
    CHECK(query == "/search?q=New+York&format=geojson&polygon_geojson=1");
    REQUIRE(starts.size() == 3);
    std::sort(starts.begin(), starts.end());
    for (std::size_t i = 1; i < starts.size(); ++i) {
      CHECK(std::chrono::duration<double>(starts[i] - starts[i - 1]).count() >= 0.99);
    }
  }
  SUBCASE("server errors are retryable network errors") {
    try {
      live.fetch(build_query(GeocodeRequest{"fail"}));
      FAIL("expected NetworkError");
    } catch (const NetworkError& e) {
      CHECK(e.retryable());
    }
  }
  SUBCASE("unreachable host") {
    stub.stop();
    LiveGeocoderTransport dead("http://127.0.0.1:9", "ua", gate);
    CHECK_THROWS_AS(dead.fetch("q=x"), NetworkError);
  }
}

}  // TEST_SUITE
