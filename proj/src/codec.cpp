#include "geoanim/codec.hpp"

#include <cmath>

#include "geoanim/errors.hpp"
#include "geoanim/ids.hpp"

namespace geoanim::codec {

namespace {

constexpr const char* kProjectFormat = "geoanim.project/1";

const json& require(const json& j, const char* key) {
  if (!j.is_object()) throw ParseError(std::string("expected an object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'");
  return *it;
}

double get_number(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_number()) throw ParseError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

std::string get_string(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) throw ParseError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::optional<std::string> get_optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ParseError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::optional<double> get_optional_number(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw ParseError(std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

bool get_bool(const json& j, const char* key, bool fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_boolean()) throw ParseError(std::string("field '") + key + "' must be a boolean");
  return it->get<bool>();
}

json lonlat(const GeoPoint& p) { return json::array({num(p.lon), num(p.lat)}); }

GeoPoint from_lonlat(const json& c) {
  if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) {
    throw ParseError("GeoJSON position must be [lon, lat]");
  }
  return GeoPoint{c[1].get<double>(), c[0].get<double>()};
}

json ring_json(const Ring& ring) {
  json arr = json::array();
  for (const auto& p : ring) arr.push_back(lonlat(p));
  return arr;
}

Ring ring_from(const json& j) {
  if (!j.is_array()) throw ParseError("GeoJSON ring must be an array");
  Ring ring;
  ring.reserve(j.size());
  for (const auto& c : j) ring.push_back(from_lonlat(c));
  if (ring.size() >= 3 && !(ring.front() == ring.back())) ring.push_back(ring.front());
  return ring;
}

json polygon_json(const PolygonRings& poly) {
  json arr = json::array();
  for (const auto& r : poly) arr.push_back(ring_json(r));
  return arr;
}

PolygonRings polygon_from(const json& j) {
  if (!j.is_array()) throw ParseError("GeoJSON polygon must be an array of rings");
  PolygonRings poly;
  for (const auto& r : j) poly.push_back(ring_from(r));
  return poly;
}

template <class Fn>
auto wrap_parse(const char* what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

double round_decimals(double value, int decimals) {
  if (!std::isfinite(value)) return value;
  const double scale = std::pow(10.0, decimals);
  if (std::fabs(value) * scale > 9.0e15) return value;
  double r = std::round(value * scale) / scale;
  return r == 0.0 ? 0.0 : r;
}

std::string dump(const json& doc) { return doc.dump(); }

json to_json(const GeoPoint& p) { return {{"lat", num(p.lat)}, {"lon", num(p.lon)}}; }

GeoPoint point_from_json(const json& j) {
  if (j.is_array()) {
    // [lat, lon] pairs are accepted for convenience in hand-written documents.
    if (j.size() != 2 || !j[0].is_number() || !j[1].is_number()) throw ParseError("point must be [lat, lon]");
    return {j[0].get<double>(), j[1].get<double>()};
  }
  return {get_number(j, "lat"), get_number(j, "lon")};
}

json to_json(const BoundingBox& box) { return {{"min", to_json(box.min)}, {"max", to_json(box.max)}}; }

BoundingBox bbox_from_json(const json& j) {
  return {point_from_json(require(j, "min")), point_from_json(require(j, "max"))};
}

json geometry_to_geojson(const GeoShape& shape) {
  switch (shape.kind) {
    case ShapeKind::point:
      return {{"type", "Point"}, {"coordinates", shape.path.empty() ? json::array() : lonlat(shape.path.front())}};
    case ShapeKind::line:
      return {{"type", "LineString"}, {"coordinates", ring_json(shape.path)}};
    case ShapeKind::polygon:
      return {{"type", "Polygon"},
              {"coordinates", shape.polygons.empty() ? json::array() : polygon_json(shape.polygons.front())}};
    case ShapeKind::multipolygon: {
      json polys = json::array();
      for (const auto& p : shape.polygons) polys.push_back(polygon_json(p));
      return {{"type", "MultiPolygon"}, {"coordinates", polys}};
    }
  }
  return nullptr;
}

GeoShape shape_from_geojson_geometry(const json& g) {
  return wrap_parse("GeoJSON geometry", [&] {
    const std::string type = get_string(g, "type");
    if (type != "Point" && type != "LineString" && type != "Polygon" && type != "MultiPolygon") {
      throw UnsupportedGeometryError("unsupported GeoJSON geometry type '" + type + "'", {{"type", type}});
    }
    const json& coords = require(g, "coordinates");
    if (type == "Point") return GeoShape::make_point(from_lonlat(coords));
    if (type == "LineString") {
      std::vector<GeoPoint> path;
      for (const auto& c : coords) path.push_back(from_lonlat(c));
      return GeoShape::make_line(std::move(path));
    }
    if (type == "Polygon") {
      GeoShape s;
      s.kind = ShapeKind::polygon;
      s.polygons.push_back(polygon_from(coords));
      return s;
    }
    std::vector<PolygonRings> polys;
    {
      for (const auto& p : coords) polys.push_back(polygon_from(p));
    }
    return GeoShape::make_multipolygon(std::move(polys));
  });
}

json to_json(const GeoShape& shape) {
  json props = json::object();
  for (const auto& [k, v] : shape.properties) props[k] = v;
  return {{"type", "Feature"}, {"geometry", geometry_to_geojson(shape)}, {"properties", props}};
}

GeoShape shape_from_json(const json& j) {
  return wrap_parse("shape", [&] {
    if (j.is_object() && j.value("type", "") != "Feature") return shape_from_geojson_geometry(j);
    GeoShape s = shape_from_geojson_geometry(require(j, "geometry"));
    auto it = j.find("properties");
    if (it != j.end() && it->is_object()) {
      for (auto p = it->begin(); p != it->end(); ++p) {
        s.properties[p.key()] = p->is_string() ? p->get<std::string>() : p->dump();
      }
    }
    return s;
  });
}

json to_json(const StyleOverrides& style) {
  json j = {{"opacity", num(style.opacity)}};
  if (style.color) j["color"] = *style.color;
  if (style.label) j["label"] = *style.label;
  if (style.image_asset) j["image_asset"] = *style.image_asset;
  return j;
}

StyleOverrides style_from_json(const json& j) {
  StyleOverrides s;
  if (j.is_null()) return s;
  s.opacity = get_optional_number(j, "opacity").value_or(1.0);
  s.color = get_optional_string(j, "color");
  s.label = get_optional_string(j, "label");
  s.image_asset = get_optional_string(j, "image_asset");
  return s;
}

json args_to_json(const BlockArgs& args) {
  return std::visit(
      [](const auto& a) -> json {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, HighlightAreaArgs>) {
          return {{"shape", to_json(a.shape)}};
        } else if constexpr (std::is_same_v<T, HighlightLineArgs>) {
          return {{"path", to_json(a.path)}};
        } else if constexpr (std::is_same_v<T, HighlightPointArgs>) {
          return {{"point", to_json(a.point)}};
        } else if constexpr (std::is_same_v<T, CameraZoomArgs>) {
          return {{"target", to_json(a.target)}, {"zoom_level", num(a.zoom_level)}};
        } else if constexpr (std::is_same_v<T, CameraTranslateArgs>) {
          return {{"from", to_json(a.from)}, {"to", to_json(a.to)}, {"zoom_level", num(a.zoom_level)}};
        } else if constexpr (std::is_same_v<T, CameraOrbitArgs>) {
          json j = {{"center", to_json(a.center)},
                    {"zoom_level", num(a.zoom_level)},
                    {"sweep", num(a.sweep)},
                    {"direction", a.direction == OrbitDirection::cw ? "cw" : "ccw"}};
          if (a.start_bearing) j["start_bearing"] = num(*a.start_bearing);
          if (a.pitch) j["pitch"] = num(*a.pitch);
          return j;
        } else if constexpr (std::is_same_v<T, ElementRouteArgs>) {
          json j = {{"path", to_json(a.path)}};
          if (a.sprite) j["sprite"] = *a.sprite;
          return j;
        } else if constexpr (std::is_same_v<T, SpatialTransitionArgs>) {
          return {{"from_shape", to_json(a.from_shape)}, {"to_shape", to_json(a.to_shape)}};
        } else {
          return {{"region", to_json(a.region)},
                  {"cluster_count", a.cluster_count},
                  {"sprite", a.sprite},
                  {"seed", a.seed}};
        }
      },
      args);
}

BlockArgs args_from_json(BlockKind kind, const json& j) {
  return wrap_parse("block args", [&]() -> BlockArgs {
    switch (kind) {
      case BlockKind::highlight_area: return HighlightAreaArgs{shape_from_json(require(j, "shape"))};
      case BlockKind::highlight_line: return HighlightLineArgs{shape_from_json(require(j, "path"))};
      case BlockKind::highlight_point: return HighlightPointArgs{point_from_json(require(j, "point"))};
      case BlockKind::camera_zoom:
        return CameraZoomArgs{point_from_json(require(j, "target")), get_number(j, "zoom_level")};
      case BlockKind::camera_translate:
        return CameraTranslateArgs{point_from_json(require(j, "from")), point_from_json(require(j, "to")),
                                   get_number(j, "zoom_level")};
      case BlockKind::camera_orbit: {
        CameraOrbitArgs a;
        a.center = point_from_json(require(j, "center"));
        a.zoom_level = get_number(j, "zoom_level");
        a.sweep = get_number(j, "sweep");
        auto dir = get_optional_string(j, "direction").value_or("cw");
        if (dir != "cw" && dir != "ccw") throw ParseError("orbit direction must be cw or ccw");
        a.direction = dir == "cw" ? OrbitDirection::cw : OrbitDirection::ccw;
        a.start_bearing = get_optional_number(j, "start_bearing");
        a.pitch = get_optional_number(j, "pitch");
        return a;
      }
      case BlockKind::element_route:
        return ElementRouteArgs{shape_from_json(require(j, "path")), get_optional_string(j, "sprite")};
      case BlockKind::element_spatial_transition:
        return SpatialTransitionArgs{shape_from_json(require(j, "from_shape")),
                                     shape_from_json(require(j, "to_shape"))};
      case BlockKind::element_auxiliary_motion: {
        AuxiliaryMotionArgs a;
        a.region = bbox_from_json(require(j, "region"));
        a.cluster_count = require(j, "cluster_count").get<int>();
        a.sprite = get_string(j, "sprite");
        a.seed = require(j, "seed").get<std::uint64_t>();
        return a;
      }
    }
    throw ParseError("unknown block kind");
  });
}

namespace {

BlockKind kind_from(const json& j) {
  auto name = get_string(j, "kind");
  auto kind = parse_block_kind(name);
  if (!kind) throw ParseError("unknown block kind '" + name + "'", {{"kind", name}});
  return *kind;
}

}  // namespace

json to_json(const AnimationBlock& b) {
  return {{"id", b.id},
          {"kind", to_string(b.kind)},
          {"start_time", seconds(b.start_time)},
          {"end_time", seconds(b.end_time)},
          {"args", args_to_json(b.args)},
          {"style", to_json(b.style)}};
}

AnimationBlock block_from_json(const json& j) {
  return wrap_parse("block", [&] {
    AnimationBlock b;
    b.id = get_string(j, "id");
    b.kind = kind_from(j);
    b.start_time = get_number(j, "start_time");
    b.end_time = get_number(j, "end_time");
    b.args = args_from_json(b.kind, require(j, "args"));
    auto it = j.find("style");
    if (it != j.end()) b.style = style_from_json(*it);
    return b;
  });
}

json to_json(const Timeline& t) {
  json blocks = json::array();
  for (const auto& b : t.blocks) blocks.push_back(to_json(b));
  return {{"blocks", blocks}, {"duration", seconds(t.duration())}, {"map_style", to_string(t.map_style)}};
}

Timeline timeline_from_json(const json& j) {
  return wrap_parse("timeline", [&] {
    Timeline t;
    for (const auto& b : require(j, "blocks")) t.blocks.push_back(block_from_json(b));
    auto style_name = j.value("map_style", std::string("streets"));
    auto style = parse_map_style(style_name);
    if (!style) throw ParseError("unknown map style '" + style_name + "'");
    t.map_style = *style;
    return t;
  });
}

json to_json(const SceneBreakdownItem& item) {
  json j = {{"id", item.id},
            {"kind", to_string(item.kind)},
            {"short_description", item.short_description},
            {"long_description", item.long_description},
            {"resolved", item.resolved},
            {"user_notes", item.user_notes},
            {"style", to_json(item.style)}};
  if (item.args) j["args"] = args_to_json(*item.args);
  return j;
}

SceneBreakdownItem item_from_json(const json& j) {
  return wrap_parse("breakdown item", [&] {
    SceneBreakdownItem item;
    item.id = get_string(j, "id");
    item.kind = kind_from(j);
    item.short_description = get_string(j, "short_description");
    item.long_description = j.value("long_description", std::string());
    item.resolved = get_bool(j, "resolved", false);
    item.user_notes = j.value("user_notes", std::string());
    auto it = j.find("args");
    if (it != j.end() && !it->is_null()) item.args = args_from_json(item.kind, *it);
    auto st = j.find("style");
    if (st != j.end()) item.style = style_from_json(*st);
    return item;
  });
}

json to_json(const SceneBreakdown& b) {
  json items = json::array();
  for (const auto& it : b.items) items.push_back(to_json(it));
  return {{"items", items}, {"source_script_hash", b.source_script_hash}};
}

SceneBreakdown breakdown_from_json(const json& j) {
  return wrap_parse("breakdown", [&] {
    SceneBreakdown b;
    for (const auto& it : require(j, "items")) b.items.push_back(item_from_json(it));
    b.source_script_hash = j.value("source_script_hash", std::string());
    return b;
  });
}

json to_json(const GeocodeRequest& r) {
  json j = {{"query", r.query},
            {"country_codes", r.country_codes},
            {"bounded", r.bounded},
            {"want_polygon", r.want_polygon}};
  if (r.viewbox) j["viewbox"] = to_json(*r.viewbox);
  return j;
}

GeocodeRequest geocode_request_from_json(const json& j) {
  return wrap_parse("geocode request", [&] {
    GeocodeRequest r;
    r.query = get_string(j, "query");
    if (auto it = j.find("country_codes"); it != j.end() && !it->is_null()) {
      r.country_codes = it->get<std::vector<std::string>>();
    }
    if (auto it = j.find("viewbox"); it != j.end() && !it->is_null()) r.viewbox = bbox_from_json(*it);
    r.bounded = get_bool(j, "bounded", false);
    r.want_polygon = get_bool(j, "want_polygon", true);
    return r;
  });
}

json to_json(const GeoAction& action) {
  return std::visit(
      [](const auto& a) -> json {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, QueryAction>) {
          return {{"type", "query"}, {"request", to_json(a.request)}};
        } else if constexpr (std::is_same_v<T, AdditionAction>) {
          json subs = json::array();
          for (const auto& s : a.sub_queries) subs.push_back(to_json(s));
          return {{"type", "addition"}, {"sub_queries", subs}};
        } else if constexpr (std::is_same_v<T, ReductionAction>) {
          return {{"type", "reduction"}, {"base", to_json(a.base)}, {"mask", to_json(a.mask)}};
        } else {
          json pts = json::array();
          for (const auto& p : a.waypoints) pts.push_back(to_json(p));
          return {{"type", "generation"}, {"waypoints", pts}, {"mode", to_string(a.mode)}};
        }
      },
      action);
}

GeoAction action_from_json(const json& j) {
  return wrap_parse("action", [&]() -> GeoAction {
    auto type = get_string(j, "type");
    if (type == "query") return QueryAction{geocode_request_from_json(require(j, "request"))};
    if (type == "addition") {
      AdditionAction a;
      for (const auto& s : require(j, "sub_queries")) a.sub_queries.push_back(geocode_request_from_json(s));
      return a;
    }
    if (type == "reduction") {
      return ReductionAction{geocode_request_from_json(require(j, "base")),
                             geocode_request_from_json(require(j, "mask"))};
    }
    if (type == "generation") {
      GenerationAction a;
      for (const auto& p : require(j, "waypoints")) a.waypoints.push_back(point_from_json(p));
      auto mode_name = j.value("mode", std::string("land"));
      auto mode = parse_travel_mode(mode_name);
      if (!mode) throw ParseError("unknown travel mode '" + mode_name + "'");
      a.mode = *mode;
      return a;
    }
    throw ParseError("unknown action type '" + type + "'");
  });
}

json to_json(const ChatMessage& m) { return {{"role", to_string(m.role)}, {"content", m.content}}; }

ChatMessage message_from_json(const json& j) {
  auto name = get_string(j, "role");
  auto role = parse_chat_role(name);
  if (!role) throw ParseError("unknown chat role '" + name + "'");
  return {*role, j.value("content", std::string())};
}

json to_json(const ResearchSession& s) {
  json msgs = json::array();
  for (const auto& m : s.messages) msgs.push_back(to_json(m));
  json j = {{"block_id", s.block_id},
            {"messages", msgs},
            {"resolved_params", s.resolved_params},
            {"citations", s.citations}};
  if (s.chosen_action) j["chosen_action"] = to_json(*s.chosen_action);
  if (s.resolved_shape) j["resolved_shape"] = to_json(*s.resolved_shape);
  if (s.error) j["error"] = *s.error;
  return j;
}

ResearchSession session_from_json(const json& j) {
  return wrap_parse("research session", [&] {
    ResearchSession s;
    s.block_id = get_string(j, "block_id");
    for (const auto& m : require(j, "messages")) s.messages.push_back(message_from_json(m));
    if (auto it = j.find("chosen_action"); it != j.end() && !it->is_null()) s.chosen_action = action_from_json(*it);
    if (auto it = j.find("resolved_shape"); it != j.end() && !it->is_null()) s.resolved_shape = shape_from_json(*it);
    if (auto it = j.find("resolved_params"); it != j.end()) {
      s.resolved_params = it->get<std::map<std::string, std::string>>();
    }
    if (auto it = j.find("citations"); it != j.end()) s.citations = it->get<std::vector<std::string>>();
    s.error = get_optional_string(j, "error");
    return s;
  });
}

json to_json(const Project& p) {
  json sessions = json::object();
  for (const auto& [k, s] : p.sessions) sessions[k] = to_json(s);
  json assets = json::object();
  for (const auto& [k, bytes] : p.assets) assets[k] = base64_encode(bytes);
  return {{"format", kProjectFormat},
          {"id", p.id},
          {"script", p.script},
          {"breakdown", to_json(p.breakdown)},
          {"timeline", to_json(p.timeline)},
          {"sessions", sessions},
          {"assets", assets},
          {"created_ms", p.created_ms},
          {"modified_ms", p.modified_ms}};
}

Project project_from_json(const json& j) {
  return wrap_parse("project", [&] {
    auto format = j.value("format", std::string(kProjectFormat));
    if (format != kProjectFormat) throw ParseError("unsupported project format '" + format + "'");
    Project p;
    p.id = get_string(j, "id");
    p.script = j.value("script", std::string());
    if (auto it = j.find("breakdown"); it != j.end()) p.breakdown = breakdown_from_json(*it);
    if (auto it = j.find("timeline"); it != j.end()) p.timeline = timeline_from_json(*it);
    if (auto it = j.find("sessions"); it != j.end()) {
      for (auto s = it->begin(); s != it->end(); ++s) p.sessions[s.key()] = session_from_json(*s);
    }
    if (auto it = j.find("assets"); it != j.end()) {
      for (auto a = it->begin(); a != it->end(); ++a) p.assets[a.key()] = base64_decode(a->get<std::string>());
    }
    p.created_ms = j.value("created_ms", std::int64_t{0});
    p.modified_ms = j.value("modified_ms", std::int64_t{0});
    return p;
  });
}

json to_json(const Edit& edit) {
  return std::visit(
      [](const auto& e) -> json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, edits::Retime>) {
          return {{"op", "retime"}, {"id", e.id}, {"start_time", seconds(e.start_time)}, {"end_time", seconds(e.end_time)}};
        } else if constexpr (std::is_same_v<T, edits::Reorder>) {
          return {{"op", "reorder"}, {"id", e.id}, {"index", e.index}};
        } else if constexpr (std::is_same_v<T, edits::Delete>) {
          return {{"op", "delete"}, {"id", e.id}};
        } else if constexpr (std::is_same_v<T, edits::UpdateArgs>) {
          return {{"op", "update_args"}, {"id", e.id}, {"kind", to_string(args_kind(e.args))}, {"args", args_to_json(e.args)}};
        } else if constexpr (std::is_same_v<T, edits::UpdateStyle>) {
          return {{"op", "update_style"}, {"id", e.id}, {"style", to_json(e.style)}};
        } else {
          json j = {{"op", "insert"}, {"block", to_json(e.block)}};
          if (e.index) j["index"] = *e.index;
          return j;
        }
      },
      edit);
}

Edit edit_from_json(const json& j) {
  return wrap_parse("edit", [&]() -> Edit {
    auto op = get_string(j, "op");
    if (op == "retime") return edits::Retime{get_string(j, "id"), get_number(j, "start_time"), get_number(j, "end_time")};
    if (op == "reorder") return edits::Reorder{get_string(j, "id"), require(j, "index").get<std::size_t>()};
    if (op == "delete") return edits::Delete{get_string(j, "id")};
    if (op == "update_args") return edits::UpdateArgs{get_string(j, "id"), args_from_json(kind_from(j), require(j, "args"))};
    if (op == "update_style") return edits::UpdateStyle{get_string(j, "id"), style_from_json(require(j, "style"))};
    if (op == "insert") {
      edits::Insert ins{block_from_json(require(j, "block")), std::nullopt};
      if (auto it = j.find("index"); it != j.end() && !it->is_null()) ins.index = it->get<std::size_t>();
      return ins;
    }
    throw ParseError("unknown edit op '" + op + "'");
  });
}

json to_json(const ValidationReport& report) {
  json violations = json::array();
  for (const auto& v : report.violations) {
    violations.push_back({{"severity", to_string(v.severity)},
                          {"code", v.code},
                          {"block_ids", v.block_ids},
                          {"message", v.message}});
  }
  return {{"valid", !report.has_errors()},
          {"errors", report.count(Severity::error)},
          {"warnings", report.count(Severity::warning)},
          {"violations", violations}};
}

std::string serialize(const Project& project) { return dump(to_json(project)); }

Project parse_project(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("project document is not valid JSON: ") + e.what());
  }
  return project_from_json(j);
}

}  // namespace geoanim::codec
