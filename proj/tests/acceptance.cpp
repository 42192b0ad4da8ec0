// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Tolerances are fixed here; measured values are printed next to them.

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include "geoanim/breakdown.hpp"
#include "geoanim/codec.hpp"
#include "geoanim/geocoder.hpp"
#include "geoanim/geometry.hpp"
#include "geoanim/scenario.hpp"
#include "geoanim/sequencer.hpp"
#include "geoanim/service.hpp"
#include "geoanim/store.hpp"
#include "geoanim/timeline.hpp"
#include "support.hpp"
#include "timelines.hpp"

using namespace geoanim;
using namespace geoanim::testing;
using codec::json;
namespace geo = geoanim::geometry;
namespace seq = geoanim::sequencer;
namespace fs = std::filesystem;
using Steady = std::chrono::steady_clock;

namespace {

const fs::path kFixtures = GEOANIM_TEST_FIXTURES_DIR;

double seconds_since(Steady::time_point start) { return std::chrono::duration<double>(Steady::now() - start).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

GeoShape random_convex(std::mt19937_64& rng, double lat, double lon, double r) {
  std::uniform_int_distribution<int> count(3, 12);
  std::uniform_real_distribution<double> angle(0, 2 * std::numbers::pi);
  std::vector<double> a(static_cast<std::size_t>(count(rng)));
  for (auto& x : a) x = angle(rng);
  std::sort(a.begin(), a.end());
  Ring ring;
  for (double x : a) ring.push_back({lat + r * std::sin(x), lon + r * std::cos(x)});
  ring.push_back(ring.front());
  return GeoShape::make_polygon(std::move(ring));
}

// 200 polygons as 100 overlapping pairs; area, union and difference are each
// checked against 10^6-sample Monte Carlo estimates.
Outcome geometry_oracle() {
  const auto start = Steady::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> lat(-55, 55), lon(-150, 150), shift(-0.6, 0.6), unit(0, 1);
  double worst = 0.0;
  int contained = 0, sampled = 0;
  for (int pair = 0; pair < 100; ++pair) {
    const double la = lat(rng), lo = lon(rng);
    auto make = [&](double la0, double lo0) {
      return pair % 2 ? random_star(rng, la0, lo0, 0.5, 1.0) : random_convex(rng, la0, lo0, 1.0);
    };
    const GeoShape a = make(la, lo);
    const GeoShape b = make(la + shift(rng), lo + shift(rng));
    std::vector<GeoShape> both{a, b};
    const GeoShape u = geo::union_of(both);
    const GeoShape d = geo::difference(a, b);

    // Each estimate samples a box that tightly bounds the shape it measures.
    // a - b is stratified: densely inside its own bounding box, plus whatever
    // the pass over a finds outside that box (non-zero if parts went missing).
    double mc_a = 0, mc_b = 0, mc_u = 0, mc_d = 0;
    const auto seed = static_cast<std::uint64_t>(pair);
    const bool has_d = !d.is_empty();
    const Box dbox = has_d ? box_of({&d}) : Box{0, 0, 0, 0};
    auto in_dbox = [&](double y, double x) { return has_d && y >= dbox.lat0 && y < dbox.lat1 && x >= dbox.lon0 && x < dbox.lon1; };
    monte_carlo(box_of({&a}), 1000, seed, [&](double y, double x, double w) {
      if (!oracle_contains(a, y, x)) return;
      mc_a += w;
      if (!in_dbox(y, x) && !oracle_contains(b, y, x)) mc_d += w;
    });
    if (has_d) {
      monte_carlo(dbox, 1000, seed + 3000, [&](double y, double x, double w) {
        mc_d += (oracle_contains(a, y, x) && !oracle_contains(b, y, x)) * w;
      });
    }
    monte_carlo(box_of({&b}), 1000, seed + 1000, [&](double y, double x, double w) { mc_b += oracle_contains(b, y, x) * w; });
    monte_carlo(box_of({&a, &b}), 1000, seed + 2000, [&](double y, double x, double w) {
      mc_u += (oracle_contains(a, y, x) || oracle_contains(b, y, x)) * w;
    });
    for (auto [got, want] : {std::pair{geo::area(a), mc_a}, {geo::area(b), mc_b}, {geo::area(u), mc_u}, {geo::area(d), mc_d}}) {
      if (want > 0) worst = std::max(worst, std::fabs(got - want) / want);
    }

    const Box box = box_of({&a, &b});
    for (int k = 0; k < 10;) {
      const double y = box.lat0 + unit(rng) * (box.lat1 - box.lat0), x = box.lon0 + unit(rng) * (box.lon1 - box.lon0);
      if (!oracle_contains(a, y, x) && !oracle_contains(b, y, x)) continue;
      ++k;
      ++sampled;
      contained += geo::contains(u, {y, x});
    }
  }
  const double secs = seconds_since(start);
  return {worst < 0.01 && contained == sampled && sampled == 1000 && secs < 60.0,
          "max relative error " + fmt("%.5f", worst) + " (< 0.01), union containment " + std::to_string(contained) + "/" +
              std::to_string(sampled) + ", " + fmt("%.1f", secs) + " s (< 60)"};
}

Outcome morph_exactness() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> lat(-50, 50), lon(-150, 150), shift(-3, 3);
  double worst0 = 0.0, worst1 = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double la = lat(rng), lo = lon(rng);
    const auto a = random_star(rng, la, lo, 0.5, 1.5);
    const auto b = random_star(rng, la + shift(rng), lo + shift(rng), 0.5, 1.5);
    const auto corr = geo::correspond(a, b);
    Ring source = corr.source, target = corr.target;
    source.push_back(source.front());
    target.push_back(target.front());
    worst0 = std::max(worst0, hausdorff_deg(geo::morph(a, b, 0.0).polygons.at(0).at(0), source));
    worst1 = std::max(worst1, hausdorff_deg(geo::morph(a, b, 1.0).polygons.at(0).at(0), target));
  }

  const auto project = codec::parse_project(slurp(kFixtures / "projects" / "dakota.json"));
  const auto& grow = std::get<SpatialTransitionArgs>(project.timeline.blocks.at(1).args);
  std::vector<double> areas;
  for (int k = 0; k <= 10; ++k) areas.push_back(geo::area(geo::morph(grow.from_shape, grow.to_shape, k / 10.0)));
  const bool monotone = std::is_sorted(areas.begin(), areas.end()) && areas.front() < areas.back();
  return {worst0 < 1e-6 && worst1 < 1e-6 && monotone,
          "Hausdorff at 0 " + fmt("%.2e", worst0) + ", at 1 " + fmt("%.2e", worst1) + " deg (< 1e-6); Dakota areas " +
              (monotone ? "non-decreasing" : "NOT monotone") + " over 11 fractions"};
}

Outcome river_avon_query() {
  GeocodeRequest r;
  r.query = "River Avon";
  r.country_codes = {"gb"};
  r.viewbox = BoundingBox{{51.3, -2.8}, {51.6, -1.5}};
  r.bounded = true;
  const std::string want = "q=River+Avon&format=geojson&polygon_geojson=1&countrycodes=gb&viewbox=-2.8,51.3,-1.5,51.6&bounded=1";
  const auto got = build_query(r);
  return {got == want, got};
}

Outcome mace_replay() {
  const auto manifest = load_scenarios(kFixtures);
  const auto& scenario = find_scenario(manifest, "mace");
  const auto start = Steady::now();
  auto rt1 = replay_runtime(kFixtures);
  const auto first = run_scenario(scenario, rt1, kFixtures).project;
  const double secs = seconds_since(start);
  auto rt2 = replay_runtime(kFixtures);
  const auto second = run_scenario(scenario, rt2, kFixtures).project;

  const std::vector<BlockKind> want{BlockKind::camera_zoom, BlockKind::element_route, BlockKind::camera_zoom, BlockKind::highlight_area};
  std::vector<BlockKind> got;
  bool resolved = true;
  for (const auto& i : first.breakdown.items) {
    got.push_back(i.kind);
    resolved = resolved && i.resolved;
  }
  const auto report = validate_timeline(first.timeline);
  const bool identical = codec::serialize(first) == codec::serialize(second);
  return {got == want && resolved && !report.has_errors() && first.timeline.blocks.size() == 4 && identical && secs < 5.0,
          std::string("kinds ") + (got == want ? "match" : "differ") + ", " + (resolved ? "all resolved" : "unresolved items") +
              ", " + std::to_string(report.count(Severity::error)) + " validation errors, runs " +
              (identical ? "byte-identical" : "differ") + ", " + fmt("%.3f", secs) + " s (< 5)"};
}

Outcome scheduling_determinism() {
  std::mt19937_64 rng(4242);
  int overlap = 0, order_broken = 0, impure = 0;
  for (int n = 0; n < 50; ++n) {
    // Resolved breakdown built from random block arguments, in shuffled order.
    const auto source = random_timeline(rng, 2 + n % 6);
    SceneBreakdown b;
    for (const auto& blk : source.blocks) {
      SceneBreakdownItem item;
      item.id = blk.id;
      item.kind = blk.kind;
      item.short_description = item.long_description = blk.id;
      item.args = blk.args;
      item.resolved = true;
      b.items.push_back(item);
    }
    std::shuffle(b.items.begin(), b.items.end(), rng);
    const auto tl = compile(b);
    if (!(tl == compile(b))) ++impure;
    for (const auto& v : validate_timeline(tl).violations) overlap += v.code == "overlap";
    std::vector<std::string> ids, want;
    for (const auto& blk : tl.blocks) ids.push_back(blk.id);
    for (const auto& i : b.items) want.push_back(i.id);
    double last = -1;
    for (const auto& blk : tl.blocks) {
      if (is_camera(blk.kind)) continue;
      if (blk.start_time < last) ++order_broken;
      last = blk.start_time;
    }
    if (ids != want) ++order_broken;
  }

  int pairs = 0, activity = 0, purity = 0;
  for (int k = 0; k < 20; ++k) {
    const auto tl = random_timeline(rng, 3 + k % 5);
    const seq::PreparedTimeline prepared(tl);
    std::vector<double> ts;
    for (const auto& blk : tl.blocks) ts.insert(ts.end(), {blk.start_time, blk.end_time});
    std::uniform_real_distribution<double> pick(0, tl.duration() + 1);
    while (ts.size() < 50) ts.push_back(pick(rng));
    ts.resize(50);
    for (double t : ts) {
      ++pairs;
      const auto a = seq::evaluate(tl, t);
      const auto again = codec::dump(seq::to_json(seq::evaluate(tl, t)));
      const auto cached = codec::dump(seq::to_json(prepared.evaluate(t)));
      if (codec::dump(seq::to_json(a)) != again || again != cached) ++purity;
      std::vector<std::string> want, got;
      for (const auto& blk : tl.blocks) {
        if (!is_camera(blk.kind) && blk.start_time <= t && t < blk.end_time) want.push_back(blk.id);
      }
      for (const auto& o : a.overlays) got.push_back(o.block_id);
      std::sort(want.begin(), want.end());
      std::sort(got.begin(), got.end());
      if (want != got) ++activity;
    }
  }
  return {overlap == 0 && order_broken == 0 && impure == 0 && pairs == 1000 && activity == 0 && purity == 0,
          "50 compiles: " + std::to_string(overlap) + " overlaps, " + std::to_string(order_broken) + " order breaks, " +
              std::to_string(impure) + " impure; " + std::to_string(pairs) + " (timeline, t) pairs: " +
              std::to_string(activity) + " activity mismatches, " + std::to_string(purity) + " purity mismatches"};
}

Outcome route_validator() {
  const auto routes = json::parse(slurp(kFixtures / "routes.json"));
  const auto manifest = load_scenarios(kFixtures);
  double worst = 0.0;
  int checked = 0;
  for (const auto& r : routes.at("routes")) {
    auto rt = replay_runtime(kFixtures);
    const auto p = run_scenario(find_scenario(manifest, r.at("scenario")), rt, kFixtures).project;
    const auto& item = p.breakdown.items.at(r.at("item").get<std::size_t>());
    const auto& path = std::get<ElementRouteArgs>(*item.args).path.path;
    std::vector<GeoPoint> reference;
    for (const auto& pt : r.at("points")) reference.push_back({pt[0].get<double>(), pt[1].get<double>()});
    worst = std::max(worst, route_deviation_km(path, reference));
    ++checked;
  }
  return {checked > 0 && worst < 1.0,
          std::to_string(checked) + " recorded routes, max deviation " + fmt("%.3f", worst) + " km (< 1)"};
}

Outcome performance() {
  std::mt19937_64 rng(9);
  const auto tl = random_timeline(rng, 10, 6.0);  // 20 blocks over 60 s
  auto start = Steady::now();
  const auto stream = seq::export_frames(tl, 30);
  const double export_secs = seconds_since(start);
  const auto lines = std::count(stream.begin(), stream.end(), '\n');

  const auto root = temp_dir("acceptance-service");
  auto store = std::make_shared<ProjectStore>(root);
  auto project = codec::parse_project(slurp(kFixtures / "projects" / "mace.json"));
  store->create(project);
  service::Service svc(store, replay_runtime(kFixtures));
  service::HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  server.start();
  httplib::Client client("127.0.0.1", port);
  client.set_keep_alive(true);
  std::uniform_real_distribution<double> pick(0, project.timeline.duration());
  std::vector<double> ms;
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string path = "/projects/" + project.id + "/frame?t=" + fmt("%.3f", pick(rng));
    start = Steady::now();
    const auto res = client.Get(path);
    ms.push_back(seconds_since(start) * 1000.0);
    if (!res || res->status != 200) ++failures;
  }
  server.stop();
  fs::remove_all(root);
  std::sort(ms.begin(), ms.end());
  const double p99 = ms[static_cast<std::size_t>(0.99 * static_cast<double>(ms.size())) - 1];
  return {export_secs < 1.0 && lines == 1801 && p99 < 10.0 && failures == 0,
          "export " + std::to_string(lines) + " frames in " + fmt("%.3f", export_secs) + " s (< 1); GET /frame p99 " +
              fmt("%.2f", p99) + " ms (< 10) over 1000 requests, " + std::to_string(failures) + " failed"};
}

Outcome store_atomicity() {
  const auto root = temp_dir("acceptance-store");
  ProjectStore store(root);
  Project p;
  p.id = "atomic";
  p.script = "initial";
  store.create(p);
  int recovered = 0;
  for (int i = 0; i < 100; ++i) {
    const auto before = slurp(store.project_path("atomic"));
    const auto rev = store.load("atomic").revision;
    store.set_fault_hook([i](const fs::path& temp) {
      if (i % 2) fs::resize_file(temp, fs::file_size(temp) / 2);
      throw std::runtime_error("injected fault");
    });
    bool threw = false;
    try {
      store.update("atomic", rev, [&](Project& q) { q.script = "lost " + std::to_string(i); });
    } catch (const Error&) {
      threw = true;
    }
    store.set_fault_hook(nullptr);
    ProjectStore reopened(root);  // a restart sweeps leftovers
    const auto after = reopened.load("atomic");
    if (threw && slurp(store.project_path("atomic")) == before && after.revision == rev) ++recovered;
    store.update("atomic", rev, [&](Project& q) { q.script = "kept " + std::to_string(i); });
  }
  fs::remove_all(root);
  return {recovered == 100, std::to_string(recovered) + "/100 injected faults left the previous revision intact"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"geometry-oracle", geometry_oracle},
      {"morph-endpoints", morph_exactness},
      {"nominatim-query", river_avon_query},
      {"replay-pipeline", mace_replay},
      {"scheduling-determinism", scheduling_determinism},
      {"route-validator", route_validator},
      {"performance", performance},
      {"store-atomicity", store_atomicity},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
