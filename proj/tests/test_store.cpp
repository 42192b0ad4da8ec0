#include <doctest.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "geoanim/codec.hpp"
#include "geoanim/errors.hpp"
#include "geoanim/store.hpp"
#include "support.hpp"

using namespace geoanim;
using namespace geoanim::testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Project sample(const std::string& id) {
  Project p;
  p.id = id;
  p.script = "From London to Toronto.";
  p.created_ms = p.modified_ms = 1700000000000;
  p.timeline.blocks = {AnimationBlock{"b1", BlockKind::highlight_point, 0, 2, HighlightPointArgs{{51.5, -0.12}}, {}}};
  return p;
}

std::size_t temp_files(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().filename().string().find(".tmp.") != std::string::npos;
  return n;
}

}  // namespace

TEST_SUITE("store") {
TEST_CASE("create, load, update") {
  ProjectStore store(temp_dir("store"));
  auto created = store.create(sample("p1"));
  CHECK(created.revision == 1);
  CHECK(slurp(store.project_path("p1")) == store_document(sample("p1"), 1));
  auto loaded = store.load("p1");
  CHECK(codec::serialize(loaded.project) == codec::serialize(sample("p1")));
  CHECK(loaded.revision == 1);
  CHECK_THROWS_AS(store.create(sample("p1")), ConflictError);

  auto r2 = store.update("p1", 1, [](Project& p) { p.script += "!"; });
  auto r3 = store.update("p1", 2, [](Project& p) { p.script += "!"; });
  CHECK(r2.revision == 2);
  CHECK(r3.revision == 3);
  CHECK(store.load("p1").project.script == "From London to Toronto.!!");

  SUBCASE("stale revision leaves the file alone") {
    const auto before = slurp(store.project_path("p1"));
    CHECK_THROWS_AS(store.update("p1", 2, [](Project& p) { p.script = "lost"; }), ConflictError);
    CHECK(slurp(store.project_path("p1")) == before);
  }
  SUBCASE("a throwing mutation writes nothing") {
    const auto before = slurp(store.project_path("p1"));
    CHECK_THROWS_AS(store.update("p1", 3, [](Project&) { throw ValidationError("nope"); }), ValidationError);
    CHECK(slurp(store.project_path("p1")) == before);
    CHECK(store.load("p1").revision == 3);
  }
  SUBCASE("remove") {
    CHECK_THROWS_AS(store.remove("p1", 1), ConflictError);
    store.remove("p1", 3);
    CHECK_THROWS_AS(store.load("p1"), NotFoundError);
    CHECK(store.list().empty());
  }
  SUBCASE("ids are checked") {
    CHECK_THROWS_AS(store.load("../etc/passwd"), ValidationError);
    CHECK_THROWS_AS(store.load(""), ValidationError);
    CHECK_THROWS_AS(store.load("missing"), NotFoundError);
    CHECK(store.list() == std::vector<std::string>{"p1"});
  }
}

TEST_CASE("interrupted writes never corrupt the previous revision") {
  const auto root = temp_dir("faults");
  ProjectStore store(root);
  store.create(sample("p"));
  int recovered = 0;
  for (int i = 0; i < 100; ++i) {
    const auto before = slurp(store.project_path("p"));
    const auto rev = store.load("p").revision;
    // Half the faults also leave a truncated temp file behind, as a crash would.
    store.set_fault_hook([&, i](const fs::path& temp) {
      if (i % 2) fs::resize_file(temp, fs::file_size(temp) / 2);
      throw std::runtime_error("power cut");
    });
    CHECK_THROWS_AS(store.update("p", rev, [&](Project& p) { p.script = "attempt " + std::to_string(i); }), IoError);
    store.set_fault_hook(nullptr);
    const auto after = store.load("p");
    if (slurp(store.project_path("p")) == before && after.revision == rev) ++recovered;
    CHECK(temp_files(root / "projects") == 0);
    store.update("p", rev, [&](Project& p) { p.script = "write " + std::to_string(i); });
  }
  CHECK(recovered == 100);
  CHECK(store.load("p").revision == 101);

  // A crash that left a temp file is cleaned up by the next start.
  std::ofstream(root / "projects" / "p.json.tmp.999") << "{\"format\":";
  ProjectStore reopened(root);
  CHECK(temp_files(root / "projects") == 0);
  CHECK(reopened.load("p").project.script == "write 99");
}

TEST_CASE("concurrent writers are serialized") {
  ProjectStore store(temp_dir("concurrent"));
  auto p = sample("c");
  p.script.clear();
  store.create(p);
  std::vector<std::thread> threads;
  std::atomic<int> conflicts{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int k = 0; k < 25;) {
        const auto rev = store.load("c").revision;
        try {
          store.update("c", rev, [](Project& q) { q.script += "x"; });
          ++k;
        } catch (const ConflictError&) {
          ++conflicts;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  const auto final = store.load("c");
  CHECK(final.revision == 201);
  CHECK(final.project.script.size() == 200);
}

TEST_CASE("assets") {
  ProjectStore store(temp_dir("assets"));
  const std::string png = std::string("\x89PNG\r\n\x1a\n", 8) + "pixels";
  const auto id = store.put_asset(png);
  CHECK(id.size() == 32);
  CHECK(store.put_asset(png) == id);
  CHECK(store.get_asset(id) == png);
  CHECK_THROWS_AS(store.get_asset("0123456789abcdef0123456789abcdef"), NotFoundError);
  CHECK_THROWS_AS(store.put_asset(""), ValidationError);
}
}
