#include "geoanim/researcher.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <regex>

#include "geoanim/codec.hpp"
#include "geoanim/errors.hpp"
#include "geoanim/geometry.hpp"
#include "geoanim/ids.hpp"
#include "geoanim/prompts.hpp"

namespace geoanim {
namespace {

using codec::json;
namespace geo = geometry;

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

std::string describe(const GeocodeRequest& r) {
  std::string s = "'" + r.query + "'";
  if (!r.country_codes.empty()) {
    s += " in ";
    for (std::size_t i = 0; i < r.country_codes.size(); ++i) s += (i ? "," : "") + r.country_codes[i];
  }
  return s;
}

ActionResult lookup(const GeocodeRequest& req, Geocoder& geocoder) {
  auto results = geocoder.geocode(req);
  if (results.empty()) {
    throw ActionFailedError("lookup " + describe(req) + " returned no results", {{"query", req.query}});
  }
  const auto& best = select_best(results);
  std::string cite = "OpenStreetMap Nominatim: " + best.display_name;
  if (!best.osm_type.empty()) cite += " (" + best.osm_type + "/" + best.osm_id + ")";
  return {best.shape, {cite}};
}

ActionResult lookup_area(const GeocodeRequest& req, Geocoder& geocoder) {
  auto r = lookup(req, geocoder);
  if (!r.shape.is_area()) {
    throw ActionFailedError("lookup " + describe(req) + " did not return an area (got " + to_string(r.shape.kind) + ")",
                            {{"query", req.query}});
  }
  return r;
}

GeocodeRequest request_from(const json& j) {
  GeocodeRequest r;
  r.query = j.value("query", "");
  for (const auto& c : j.value("country_codes", json::array())) {
    std::string code = c.get<std::string>();
    std::transform(code.begin(), code.end(), code.begin(), [](unsigned char ch) { return std::tolower(ch); });
    r.country_codes.push_back(code);
  }
  if (j.contains("viewbox") && j["viewbox"].is_array()) {
    const auto& v = j["viewbox"];
    if (v.size() != 4) throw ValidationError("viewbox needs four numbers [min_lon, min_lat, max_lon, max_lat]");
    r.viewbox = BoundingBox{{std::min(v[1].get<double>(), v[3].get<double>()), std::min(v[0].get<double>(), v[2].get<double>())},
                            {std::max(v[1].get<double>(), v[3].get<double>()), std::max(v[0].get<double>(), v[2].get<double>())}};
  }
  r.bounded = j.value("bounded", false);
  if (blank(r.query)) throw ValidationError("a lookup needs a non-empty query");
  validate_request(r);
  return r;
}

json request_schema() {
  return json{{"type", "object"},
              {"properties",
               {{"query", {{"type", "string"}, {"description", "Nominatim free-text search, e.g. 'Toronto, Ontario, Canada'."}}},
                {"country_codes", {{"type", "array"}, {"items", {{"type", "string"}}}, {"default", json::array()}}},
                {"viewbox",
                 {{"type", "array"},
                  {"items", {{"type", "number"}}},
                  {"description", "[min_lon, min_lat, max_lon, max_lat]"}}},
                {"bounded", {{"type", "boolean"}, {"default", false}}}}},
              {"required", {"query"}}};
}

json action_properties() {
  const json waypoint{{"type", "object"},
                      {"properties", {{"lat", {{"type", "number"}}}, {"lon", {{"type", "number"}}}}},
                      {"required", {"lat", "lon"}}};
  json props = json::object();
  props["action"] = {{"type", "string"}, {"enum", {"query", "addition", "reduction", "generation"}}};
  props["query"] = request_schema();
  props["sub_queries"] = {{"type", "array"}, {"items", request_schema()}};
  props["base"] = request_schema();
  props["mask"] = request_schema();
  props["waypoints"] = {{"type", "array"}, {"items", waypoint}};
  props["mode"] = {{"type", "string"}, {"enum", {"sea", "air", "land"}}, {"default", "land"}};
  return props;
}

json params_schema(BlockKind kind) {
  json props = json::object();
  const json label{{"type", "string"}};
  const json color{{"type", "string"}, {"description", "hex colour such as #d62728"}};
  const json opacity{{"type", "number"}, {"minimum", 0}, {"maximum", 1}};
  const json zoom{{"type", "number"}, {"minimum", 0}, {"maximum", 22}};
  switch (kind) {
    case BlockKind::highlight_area:
    case BlockKind::highlight_line:
    case BlockKind::element_spatial_transition:
      props = {{"label", label}, {"color", color}, {"opacity", opacity}};
      break;
    case BlockKind::highlight_point:
      props = {{"label", label}, {"color", color}};
      break;
    case BlockKind::camera_zoom:
    case BlockKind::camera_translate:
      props = {{"zoom_level", zoom}};
      break;
    case BlockKind::camera_orbit:
      props = {{"zoom_level", zoom},
               {"sweep", {{"type", "number"}, {"minimum", 1}, {"maximum", 1080}}},
               {"direction", {{"type", "string"}, {"enum", {"cw", "ccw"}}}},
               {"pitch", {{"type", "number"}, {"minimum", 0}, {"maximum", 60}}}};
      break;
    case BlockKind::element_route:
      props = {{"sprite", {{"type", "string"}}}, {"label", label}, {"color", color}};
      break;
    case BlockKind::element_auxiliary_motion:
      props = {{"cluster_count", {{"type", "integer"}, {"minimum", 1}, {"maximum", 20}}}, {"sprite", {{"type", "string"}}}};
      break;
  }
  return json{{"type", "object"}, {"properties", props}, {"default", json::object()}};
}

bool needs_from(BlockKind kind) {
  return kind == BlockKind::camera_translate || kind == BlockKind::element_spatial_transition;
}

std::string param_text(const json& v) { return v.is_string() ? v.get<std::string>() : codec::dump(v); }

GeoPoint centre_of(const GeoShape& s) { return geo::extent(s).centroid; }

bool repairable(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::action_failed:
    case ErrorKind::validation:
    case ErrorKind::schema_violation:
    case ErrorKind::missing_tool_call:
    case ErrorKind::invalid_geometry:
    case ErrorKind::empty_input:
    case ErrorKind::antimeridian:
    case ErrorKind::unsupported_geometry:
    case ErrorKind::not_found:
      return true;
    default:
      return false;
  }
}

// Distance from p to segment [a, b] on a local equirectangular plane around p.
double point_segment_km(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
  const double k = std::numbers::pi / 180.0;
  const double c = std::cos(p.lat * k);
  const double ax = (a.lon - p.lon) * c, ay = a.lat - p.lat;
  const double bx = (b.lon - p.lon) * c, by = b.lat - p.lat;
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? -(ax * dx + ay * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return geo::haversine(p, {a.lat + t * (b.lat - a.lat), a.lon + t * (b.lon - a.lon)});
}

double directed_deviation(const std::vector<GeoPoint>& a, const std::vector<GeoPoint>& b, double step_km) {
  double worst = 0.0;
  auto nearest = [&](const GeoPoint& p) {
    double best = std::numeric_limits<double>::infinity();
    if (b.size() == 1) return geo::haversine(p, b.front());
    for (std::size_t i = 0; i + 1 < b.size(); ++i) best = std::min(best, point_segment_km(p, b[i], b[i + 1]));
    return best;
  };
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    const int n = std::max(1, static_cast<int>(std::ceil(geo::haversine(a[i], a[i + 1]) / step_km)));
    for (int s = 0; s < n; ++s) {
      const double f = static_cast<double>(s) / n;
      worst = std::max(worst, nearest({a[i].lat + f * (a[i + 1].lat - a[i].lat), a[i].lon + f * (a[i + 1].lon - a[i].lon)}));
    }
  }
  if (!a.empty()) worst = std::max(worst, nearest(a.back()));
  return worst;
}

}  // namespace

// --- Actions -------------------------------------------------------------------

ActionResult execute_action(const GeoAction& action, Geocoder& geocoder) {
  return std::visit(
      [&](const auto& a) -> ActionResult {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, QueryAction>) {
          return lookup(a.request, geocoder);
        } else if constexpr (std::is_same_v<T, AdditionAction>) {
          if (a.sub_queries.size() < 2) throw ValidationError("addition needs at least two sub-queries");
          std::vector<GeoShape> parts;
          ActionResult out;
          for (const auto& q : a.sub_queries) {
            auto r = lookup_area(q, geocoder);
            parts.push_back(std::move(r.shape));
            out.citations.insert(out.citations.end(), r.citations.begin(), r.citations.end());
          }
          out.shape = geo::union_of(parts);
          return out;
        } else if constexpr (std::is_same_v<T, ReductionAction>) {
          auto base = lookup_area(a.base, geocoder);
          auto mask = lookup_area(a.mask, geocoder);
          ActionResult out;
          out.shape = geo::difference(base.shape, mask.shape);
          if (out.shape.is_empty()) {
            throw ActionFailedError("removing " + describe(a.mask) + " from " + describe(a.base) + " leaves nothing",
                                    {{"base", a.base.query}, {"mask", a.mask.query}});
          }
          out.citations = base.citations;
          out.citations.insert(out.citations.end(), mask.citations.begin(), mask.citations.end());
          return out;
        } else {
          const auto& w = a.waypoints;
          if (w.size() < 2) throw ValidationError("generation needs at least two waypoints");
          for (std::size_t i = 0; i < w.size(); ++i) {
            if (!in_range(w[i])) {
              throw ValidationError("waypoint " + std::to_string(i + 1) + " is out of range", {{"waypoint", i + 1}});
            }
          }
          for (std::size_t i = 0; i + 1 < w.size(); ++i) {
            const double km = geo::haversine(w[i], w[i + 1]);
            if (km >= kMaxHopKm) {
              throw ValidationError("hop " + std::to_string(i + 1) + " spans " + std::to_string(static_cast<int>(km)) +
                                        " km; consecutive waypoints must be under 2000 km apart",
                                    {{"hop", i + 1}, {"distance_km", codec::num(km)}});
            }
          }
          ActionResult out;
          out.shape = GeoShape::make_line(w);
          out.shape.properties["mode"] = to_string(a.mode);
          out.citations = {std::string("generated waypoints (") + to_string(a.mode) + ")"};
          return out;
        }
      },
      action);
}

GeoAction action_from_tool_args(const json& args) {
  const std::string name = args.value("action", "");
  if (name == "query") {
    if (!args.contains("query")) throw ValidationError("action 'query' needs the 'query' field");
    return QueryAction{request_from(args["query"])};
  }
  if (name == "addition") {
    AdditionAction a;
    for (const auto& q : args.value("sub_queries", json::array())) a.sub_queries.push_back(request_from(q));
    if (a.sub_queries.size() < 2) throw ValidationError("action 'addition' needs at least two sub_queries");
    return a;
  }
  if (name == "reduction") {
    if (!args.contains("base") || !args.contains("mask")) {
      throw ValidationError("action 'reduction' needs both 'base' and 'mask'");
    }
    return ReductionAction{request_from(args["base"]), request_from(args["mask"])};
  }
  if (name == "generation") {
    GenerationAction g;
    for (const auto& p : args.value("waypoints", json::array())) g.waypoints.push_back({p.at("lat").get<double>(), p.at("lon").get<double>()});
    g.mode = parse_travel_mode(args.value("mode", "land")).value_or(TravelMode::land);
    if (g.waypoints.size() < 2) throw ValidationError("action 'generation' needs at least two waypoints");
    return g;
  }
  throw ValidationError("unknown action '" + name + "'");
}

llm::ToolSchema researcher_tool(BlockKind kind) {
  json props = action_properties();
  if (needs_from(kind)) {
    props["from"] = json{{"type", "object"},
                         {"properties", action_properties()},
                         {"required", {"action"}},
                         {"description", "Where the movement starts (same fields as the main action)."}};
  }
  props["params"] = params_schema(kind);
  props["citations"] = json{{"type", "array"}, {"items", {{"type", "string"}}}, {"default", json::array()}};
  json required = {"action"};
  if (needs_from(kind)) required.push_back("from");
  return llm::ToolSchema{"resolve_geojson",
                         "Describe how to obtain the geometry for this block and set its display parameters.",
                         json{{"type", "object"}, {"properties", props}, {"required", required}}};
}

std::optional<double> zoom_hint(const std::string& text) {
  static const std::regex re(R"(zoom\s*level\s*[:=]?\s*(\d+(?:\.\d+)?))", std::regex::icase);
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  const double z = std::stod(m[1].str());
  if (z < 0 || z > 22) return std::nullopt;
  return z;
}

double fit_zoom(const BoundingBox& box) {
  const double mid = (box.min.lat + box.max.lat) / 2 * std::numbers::pi / 180.0;
  const double span = std::max({(box.max.lon - box.min.lon) * std::cos(mid), box.max.lat - box.min.lat, 1e-4});
  const double z = std::floor(2.0 * std::log2(360.0 / span)) / 2.0;
  return std::clamp(z, 2.0, 16.0);
}

double route_deviation_km(const std::vector<GeoPoint>& a, const std::vector<GeoPoint>& b, double step_km) {
  if (a.empty() || b.empty()) throw EmptyInputError("route deviation needs two non-empty polylines");
  return std::max(directed_deviation(a, b, step_km), directed_deviation(b, a, step_km));
}

// --- Agent ---------------------------------------------------------------------

ResearcherAgent::ResearcherAgent(llm::Gateway& gateway, Geocoder& geocoder) : gateway_(gateway), geocoder_(geocoder) {}

llm::ChatRequest ResearcherAgent::base_request(const SceneBreakdownItem& item) const {
  const auto& system = prompts::get("researcher_system");
  const auto& guidance = prompts::get(std::string("researcher_kind_") + to_string(item.kind));
  llm::ChatRequest req;
  req.agent = "researcher";
  req.model_id = gateway_.model_for("researcher");
  req.prompt = llm::PromptInfo{system.id + "+" + guidance.id, system.version * 100 + guidance.version,
                               sha256_hex(system.sha256 + guidance.sha256)};
  req.tools = {researcher_tool(item.kind)};
  req.messages = {{ChatRole::system, prompts::fill(system.text, {{"kind", to_string(item.kind)}, {"guidance", guidance.text}})}};
  return req;
}

namespace {

// Builds the block arguments for an executed action; throws a repairable
// error when the geometry does not suit the block kind.
BlockArgs build_args(const SceneBreakdownItem& item, const ActionResult& main, const std::optional<ActionResult>& from,
                     const json& params) {
  auto zoom = [&] {
    if (auto z = zoom_hint(item.user_notes)) return *z;
    if (auto z = zoom_hint(item.long_description)) return *z;
    if (params.contains("zoom_level")) return params["zoom_level"].get<double>();
    return main.shape.kind == ShapeKind::point ? 14.0 : fit_zoom(geo::extent(main.shape).box);
  };
  auto require_from = [&]() -> const GeoShape& {
    if (!from) throw ValidationError(std::string(to_string(item.kind)) + " needs a 'from' action");
    return from->shape;
  };
  auto require_area = [&](const GeoShape& s, const char* what) {
    if (!s.is_area()) throw ActionFailedError(std::string(what) + " must be an area, got " + to_string(s.kind));
  };
  switch (item.kind) {
    case BlockKind::highlight_area:
      require_area(main.shape, "highlighted region");
      return HighlightAreaArgs{main.shape};
    case BlockKind::highlight_line:
      if (main.shape.kind == ShapeKind::line) return HighlightLineArgs{main.shape};
      if (main.shape.is_area()) return HighlightLineArgs{GeoShape::make_line(geo::largest_ring(main.shape))};
      throw ActionFailedError("highlighted line needs a line or an outline, got a point");
    case BlockKind::highlight_point:
      return HighlightPointArgs{main.shape.kind == ShapeKind::point ? main.shape.path.front() : centre_of(main.shape)};
    case BlockKind::camera_zoom:
      return CameraZoomArgs{centre_of(main.shape), zoom()};
    case BlockKind::camera_translate:
      return CameraTranslateArgs{centre_of(require_from()), centre_of(main.shape), zoom()};
    case BlockKind::camera_orbit: {
      CameraOrbitArgs a{centre_of(main.shape), zoom(), params.value("sweep", 360.0),
                        params.value("direction", "cw") == "ccw" ? OrbitDirection::ccw : OrbitDirection::cw,
                        std::nullopt, std::nullopt};
      if (params.contains("pitch")) a.pitch = params["pitch"].get<double>();
      return a;
    }
    case BlockKind::element_route: {
      if (main.shape.kind != ShapeKind::line) {
        throw ActionFailedError("a route needs a line (use generation), got " + std::string(to_string(main.shape.kind)));
      }
      ElementRouteArgs a{main.shape, std::nullopt};
      if (params.contains("sprite")) a.sprite = params["sprite"].get<std::string>();
      return a;
    }
    case BlockKind::element_spatial_transition: {
      const auto& start = require_from();
      require_area(start, "transition start");
      require_area(main.shape, "transition end");
      return SpatialTransitionArgs{start, main.shape};
    }
    case BlockKind::element_auxiliary_motion: {
      BoundingBox box = geo::extent(main.shape).box;
      if (box.max.lat - box.min.lat < 0.1 && box.max.lon - box.min.lon < 0.1) {
        const auto c = centre_of(main.shape);
        box = {{c.lat - 0.05, c.lon - 0.05}, {c.lat + 0.05, c.lon + 0.05}};
      }
      return AuxiliaryMotionArgs{box, static_cast<int>(params.value("cluster_count", 5)), params.value("sprite", std::string("marker")),
                                 hash64(item.id)};
    }
  }
  throw ContractViolation("unhandled block kind");
}

std::string item_brief(const SceneBreakdownItem& item, const SceneBreakdown& context) {
  std::string s = "Block type: " + std::string(to_string(item.kind)) + "\nStep: " + item.short_description +
                  "\nDetails: " + item.long_description + "\n";
  if (!item.user_notes.empty()) s += "Notes from the author: " + item.user_notes + "\n";
  if (!context.items.empty()) {
    s += "\nThe whole plan, for context:\n";
    for (std::size_t i = 0; i < context.items.size(); ++i) {
      const auto& other = context.items[i];
      s += std::to_string(i + 1) + ". " + to_string(other.kind) + ": " + other.short_description +
           (other.id == item.id ? "   <- this block" : "") + "\n";
    }
  }
  s += "\nResolve the geometry for this block with resolve_geojson.";
  return s;
}

}  // namespace

ResearcherAgent::Turn ResearcherAgent::converse(llm::ChatRequest req, ResearchSession& session, SceneBreakdownItem& item,
                                                bool allow_text) {
  const auto tool = req.tools.front();
  std::string error;
  std::vector<std::string> history;  // every failed attempt, oldest first
  for (int attempt = 0; attempt <= kMaxRepairs; ++attempt) {
    const auto resp = gateway_.complete(req);
    std::string answer = resp.text.value_or("");
    if (resp.tool_calls.empty() && allow_text && resp.text) {
      session.messages.push_back({ChatRole::assistant, *resp.text});
      return Turn{resp.text, false, std::nullopt};
    }
    try {
      const auto parsed = llm::parse_tool_call(resp, tool);
      answer = parsed.raw;
      const auto& args = parsed.arguments;
      const GeoAction action = action_from_tool_args(args);
      const ActionResult main = execute_action(action, geocoder_);
      std::optional<ActionResult> from;
      std::optional<GeoAction> from_action;
      if (args.contains("from")) {
        from_action = action_from_tool_args(args["from"]);
        from = execute_action(*from_action, geocoder_);
      }
      const json params = args.value("params", json::object());
      BlockArgs built = build_args(item, main, from, params);
      if (auto problems = args_problems(built); !problems.empty()) throw ValidationError("unusable result: " + problems.front());

      // Commit.
      session.messages.push_back({ChatRole::assistant, answer});
      session.chosen_action = action;
      session.resolved_shape = main.shape;
      session.resolved_params.clear();
      for (auto it = params.begin(); it != params.end(); ++it) session.resolved_params[it.key()] = param_text(*it);
      if (from_action) session.resolved_params["from_action"] = codec::dump(codec::to_json(*from_action));
      session.citations = main.citations;
      if (from) session.citations.insert(session.citations.end(), from->citations.begin(), from->citations.end());
      for (const auto& c : args.value("citations", json::array())) session.citations.push_back(c.get<std::string>());
      session.error.reset();
      item.args = std::move(built);
      item.resolved = true;
      if (params.contains("label")) item.style.label = params["label"].get<std::string>();
      if (params.contains("color")) item.style.color = params["color"].get<std::string>();
      if (params.contains("opacity")) item.style.opacity = params["opacity"].get<double>();
      return Turn{resp.text, true, std::nullopt};
    } catch (const Error& e) {
      if (!repairable(e)) throw;
      error = e.what();
      if (e.detail().contains("fields")) error += " " + e.detail()["fields"].dump();
      if (!resp.tool_calls.empty()) answer = resp.tool_calls.front().raw_arguments;
      history.push_back(error);
    }
    const ChatMessage said{ChatRole::assistant, answer.empty() ? "(no answer)" : answer};
    const ChatMessage repair{ChatRole::user, "That did not work: " + error + ". Call resolve_geojson again with a corrected recipe."};
    session.messages.push_back(said);
    req.messages.push_back(said);
    if (attempt < kMaxRepairs) {
      session.messages.push_back(repair);
      req.messages.push_back(repair);
    }
  }
  std::string all;
  for (const auto& h : history) all += (all.empty() ? "" : "; then ") + h;
  session.error = all;
  return Turn{std::nullopt, false, all};
}

ResearchOutcome ResearcherAgent::research_block(const SceneBreakdownItem& item, const SceneBreakdown& context) {
  if (blank(item.long_description)) throw PreconditionError("item " + item.id + " has no long description");
  ResearchOutcome out{ResearchSession{}, item};
  out.session.block_id = item.id;
  out.session.messages.push_back({ChatRole::user, item_brief(item, context)});
  auto req = base_request(item);
  req.messages.push_back(out.session.messages.back());
  converse(req, out.session, out.item, false);
  if (out.session.error) {
    out.item.resolved = false;
  }
  return out;
}

ChatOutcome ResearcherAgent::chat(const ResearchSession& session, const SceneBreakdownItem& item, const std::string& message) {
  if (blank(message)) throw ValidationError("chat message is empty");
  ChatOutcome out{"", false, session, item};
  out.session.messages.push_back({ChatRole::user, message});
  auto req = base_request(item);
  req.messages.insert(req.messages.end(), out.session.messages.begin(), out.session.messages.end());
  const auto turn = converse(req, out.session, out.item, true);
  out.updated = turn.applied;
  if (turn.text) {
    out.reply = *turn.text;
  } else if (turn.applied) {
    out.reply = "Updated the block.";
  } else {
    out.reply = "I could not apply that change: " + turn.error.value_or("unknown error");
  }
  return out;
}

}  // namespace geoanim
