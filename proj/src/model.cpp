#include "geoanim/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "geoanim/errors.hpp"

namespace geoanim {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_geometry: return "invalid_geometry";
    case ErrorKind::empty_input: return "empty_input";
    case ErrorKind::antimeridian: return "antimeridian";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::invariant: return "invariant";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::contract: return "contract";
    case ErrorKind::network: return "network";
    case ErrorKind::parse: return "parse";
    case ErrorKind::unsupported_geometry: return "unsupported_geometry";
    case ErrorKind::provider: return "provider";
    case ErrorKind::fixture_missing: return "fixture_missing";
    case ErrorKind::schema_violation: return "schema_violation";
    case ErrorKind::missing_tool_call: return "missing_tool_call";
    case ErrorKind::breakdown_failed: return "breakdown_failed";
    case ErrorKind::compile_blocked: return "compile_blocked";
    case ErrorKind::action_failed: return "action_failed";
    case ErrorKind::validation: return "validation";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

bool in_range(const GeoPoint& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

GeoShape GeoShape::make_point(GeoPoint p) {
  GeoShape s;
  s.kind = ShapeKind::point;
  s.path = {p};
  return s;
}

GeoShape GeoShape::make_line(std::vector<GeoPoint> path) {
  GeoShape s;
  s.kind = ShapeKind::line;
  s.path = std::move(path);
  return s;
}

GeoShape GeoShape::make_polygon(Ring outer, std::vector<Ring> holes) {
  GeoShape s;
  s.kind = ShapeKind::polygon;
  PolygonRings rings;
  rings.push_back(std::move(outer));
  for (auto& h : holes) rings.push_back(std::move(h));
  s.polygons.push_back(std::move(rings));
  return s;
}

GeoShape GeoShape::make_multipolygon(std::vector<PolygonRings> polygons) {
  GeoShape s;
  s.kind = ShapeKind::multipolygon;
  s.polygons = std::move(polygons);
  return s;
}

bool GeoShape::is_empty() const {
  switch (kind) {
    case ShapeKind::point:
    case ShapeKind::line: return path.empty();
    case ShapeKind::polygon:
    case ShapeKind::multipolygon: return polygons.empty();
  }
  return true;
}

std::size_t GeoShape::vertex_count() const {
  std::size_t n = path.size();
  for (const auto& poly : polygons)
    for (const auto& ring : poly) n += ring.size();
  return n;
}

std::vector<std::string> shape_problems(const GeoShape& shape) {
  std::vector<std::string> problems;
  auto check_point = [&](const GeoPoint& p) {
    if (!in_range(p)) {
      problems.push_back("vertex out of range (" + std::to_string(p.lat) + ", " + std::to_string(p.lon) + ")");
    }
  };
  switch (shape.kind) {
    case ShapeKind::point:
      if (shape.path.size() != 1) problems.push_back("point shape needs exactly one vertex");
      if (!shape.polygons.empty()) problems.push_back("point shape carries polygon rings");
      break;
    case ShapeKind::line:
      if (shape.path.size() < 2) problems.push_back("line needs at least 2 vertices");
      if (!shape.polygons.empty()) problems.push_back("line shape carries polygon rings");
      break;
    case ShapeKind::polygon:
      if (shape.polygons.size() != 1) problems.push_back("polygon shape needs exactly one polygon");
      [[fallthrough]];
    case ShapeKind::multipolygon:
      if (!shape.path.empty()) problems.push_back("area shape carries a path");
      for (const auto& poly : shape.polygons) {
        if (poly.empty()) problems.push_back("polygon without rings");
        for (const auto& ring : poly) {
          if (ring.size() < 4) problems.push_back("ring has fewer than 4 vertices");
          else if (!(ring.front() == ring.back())) problems.push_back("ring is not closed");
        }
      }
      break;
  }
  for (const auto& p : shape.path) check_point(p);
  for (const auto& poly : shape.polygons)
    for (const auto& ring : poly)
      for (const auto& p : ring) check_point(p);
  return problems;
}

const char* to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::point: return "point";
    case ShapeKind::line: return "line";
    case ShapeKind::polygon: return "polygon";
    case ShapeKind::multipolygon: return "multipolygon";
  }
  return "?";
}

std::optional<ShapeKind> parse_shape_kind(std::string_view name) {
  for (auto k : {ShapeKind::point, ShapeKind::line, ShapeKind::polygon, ShapeKind::multipolygon})
    if (name == to_string(k)) return k;
  return std::nullopt;
}

BlockCategory category(BlockKind kind) {
  switch (kind) {
    case BlockKind::highlight_area:
    case BlockKind::highlight_line:
    case BlockKind::highlight_point: return BlockCategory::highlight;
    case BlockKind::camera_zoom:
    case BlockKind::camera_translate:
    case BlockKind::camera_orbit: return BlockCategory::camera;
    case BlockKind::element_route:
    case BlockKind::element_spatial_transition:
    case BlockKind::element_auxiliary_motion: return BlockCategory::element;
  }
  return BlockCategory::highlight;
}

const char* to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::highlight_area: return "highlight_area";
    case BlockKind::highlight_line: return "highlight_line";
    case BlockKind::highlight_point: return "highlight_point";
    case BlockKind::camera_zoom: return "camera_zoom";
    case BlockKind::camera_translate: return "camera_translate";
    case BlockKind::camera_orbit: return "camera_orbit";
    case BlockKind::element_route: return "element_route";
    case BlockKind::element_spatial_transition: return "element_spatial_transition";
    case BlockKind::element_auxiliary_motion: return "element_auxiliary_motion";
  }
  return "?";
}

const char* to_string(BlockCategory c) {
  switch (c) {
    case BlockCategory::highlight: return "highlight";
    case BlockCategory::camera: return "camera";
    case BlockCategory::element: return "element";
  }
  return "?";
}

std::optional<BlockKind> parse_block_kind(std::string_view name) {
  for (auto k : kAllBlockKinds)
    if (name == to_string(k)) return k;
  return std::nullopt;
}

namespace {

void check_zoom(double zoom, std::vector<std::string>& out) {
  if (!(zoom >= 0.0 && zoom <= 22.0)) out.push_back("zoom_level outside [0, 22]");
}

void check_point_arg(const GeoPoint& p, const char* name, std::vector<std::string>& out) {
  if (!in_range(p)) out.push_back(std::string(name) + " out of range");
}

void check_shape_arg(const GeoShape& s, const char* name, std::initializer_list<ShapeKind> allowed,
                     std::vector<std::string>& out) {
  if (std::find(allowed.begin(), allowed.end(), s.kind) == allowed.end()) {
    out.push_back(std::string(name) + " has kind " + to_string(s.kind));
  }
  for (auto& p : shape_problems(s)) out.push_back(std::string(name) + ": " + p);
  if (s.is_empty()) out.push_back(std::string(name) + " is empty");
}

}  // namespace

std::vector<std::string> args_problems(const BlockArgs& args) {
  std::vector<std::string> out;
  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, HighlightAreaArgs>) {
          check_shape_arg(a.shape, "shape", {ShapeKind::polygon, ShapeKind::multipolygon}, out);
        } else if constexpr (std::is_same_v<T, HighlightLineArgs>) {
          check_shape_arg(a.path, "path", {ShapeKind::line}, out);
        } else if constexpr (std::is_same_v<T, HighlightPointArgs>) {
          check_point_arg(a.point, "point", out);
        } else if constexpr (std::is_same_v<T, CameraZoomArgs>) {
          check_point_arg(a.target, "target", out);
          check_zoom(a.zoom_level, out);
        } else if constexpr (std::is_same_v<T, CameraTranslateArgs>) {
          check_point_arg(a.from, "from", out);
          check_point_arg(a.to, "to", out);
          check_zoom(a.zoom_level, out);
        } else if constexpr (std::is_same_v<T, CameraOrbitArgs>) {
          check_point_arg(a.center, "center", out);
          check_zoom(a.zoom_level, out);
          if (a.sweep == 0.0 || !std::isfinite(a.sweep)) out.push_back("sweep must be non-zero");
          if (a.pitch && !(*a.pitch >= 0.0 && *a.pitch <= 60.0)) out.push_back("pitch outside [0, 60]");
        } else if constexpr (std::is_same_v<T, ElementRouteArgs>) {
          check_shape_arg(a.path, "path", {ShapeKind::line}, out);
        } else if constexpr (std::is_same_v<T, SpatialTransitionArgs>) {
          check_shape_arg(a.from_shape, "from_shape", {ShapeKind::polygon, ShapeKind::multipolygon}, out);
          check_shape_arg(a.to_shape, "to_shape", {ShapeKind::polygon, ShapeKind::multipolygon}, out);
        } else if constexpr (std::is_same_v<T, AuxiliaryMotionArgs>) {
          check_point_arg(a.region.min, "region.min", out);
          check_point_arg(a.region.max, "region.max", out);
          if (a.region.min.lat > a.region.max.lat || a.region.min.lon > a.region.max.lon) {
            out.push_back("region min exceeds max");
          }
          if (a.cluster_count < 1) out.push_back("cluster_count must be >= 1");
          if (a.sprite.empty()) out.push_back("sprite asset id is empty");
        }
      },
      args);
  return out;
}

std::vector<std::string> block_problems(const AnimationBlock& block) {
  std::vector<std::string> out;
  if (block.id.empty()) out.push_back("empty block id");
  if (!std::isfinite(block.start_time) || block.start_time < 0.0) out.push_back("start_time must be >= 0");
  if (!std::isfinite(block.end_time) || !(block.end_time > block.start_time)) {
    out.push_back("end_time must be greater than start_time");
  }
  if (args_kind(block.args) != block.kind) {
    out.push_back(std::string("args tag ") + to_string(args_kind(block.args)) + " does not match kind " +
                  to_string(block.kind));
  }
  if (!(block.style.opacity >= 0.0 && block.style.opacity <= 1.0)) out.push_back("opacity outside [0, 1]");
  for (auto& p : args_problems(block.args)) out.push_back(p);
  return out;
}

const char* to_string(MapStyle style) {
  switch (style) {
    case MapStyle::streets: return "streets";
    case MapStyle::satellite: return "satellite";
    case MapStyle::light: return "light";
    case MapStyle::dark: return "dark";
    case MapStyle::terrain: return "terrain";
  }
  return "?";
}

std::optional<MapStyle> parse_map_style(std::string_view name) {
  for (auto s : {MapStyle::streets, MapStyle::satellite, MapStyle::light, MapStyle::dark, MapStyle::terrain})
    if (name == to_string(s)) return s;
  return std::nullopt;
}

double Timeline::duration() const {
  double d = 0.0;
  for (const auto& b : blocks) d = std::max(d, b.end_time);
  return d;
}

const AnimationBlock* Timeline::find(std::string_view id) const {
  for (const auto& b : blocks)
    if (b.id == id) return &b;
  return nullptr;
}

const SceneBreakdownItem* SceneBreakdown::find(std::string_view id) const {
  for (const auto& it : items)
    if (it.id == id) return &it;
  return nullptr;
}

SceneBreakdownItem* SceneBreakdown::find(std::string_view id) {
  for (auto& it : items)
    if (it.id == id) return &it;
  return nullptr;
}

const char* to_string(TravelMode mode) {
  switch (mode) {
    case TravelMode::sea: return "sea";
    case TravelMode::air: return "air";
    case TravelMode::land: return "land";
  }
  return "?";
}

std::optional<TravelMode> parse_travel_mode(std::string_view name) {
  for (auto m : {TravelMode::sea, TravelMode::air, TravelMode::land})
    if (name == to_string(m)) return m;
  return std::nullopt;
}

const char* action_name(const GeoAction& action) {
  switch (action.index()) {
    case 0: return "query";
    case 1: return "addition";
    case 2: return "reduction";
    case 3: return "generation";
  }
  return "?";
}

const char* to_string(ChatRole role) {
  switch (role) {
    case ChatRole::system: return "system";
    case ChatRole::user: return "user";
    case ChatRole::assistant: return "assistant";
    case ChatRole::tool: return "tool";
  }
  return "?";
}

std::optional<ChatRole> parse_chat_role(std::string_view name) {
  for (auto r : {ChatRole::system, ChatRole::user, ChatRole::assistant, ChatRole::tool})
    if (name == to_string(r)) return r;
  return std::nullopt;
}

std::vector<std::string> dangling_sessions(const Project& project) {
  std::vector<std::string> out;
  for (const auto& [key, _] : project.sessions) {
    if (!project.timeline.find(key) && !project.breakdown.find(key)) out.push_back(key);
  }
  return out;
}

}  // namespace geoanim
