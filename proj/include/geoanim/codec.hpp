#pragma once

// Canonical structured-text (JSON) encoding for every document the engine
// exchanges: projects, timelines, edits, frames, sessions.
//
// Canonical form: object keys sorted, compact separators, floats rounded to
// 6 decimals (times to milliseconds), negative zero folded to zero. Geometry
// is embedded as GeoJSON Features with (lon, lat) coordinate order.

#include <string>

#include <json.hpp>

#include "geoanim/model.hpp"
#include "geoanim/timeline.hpp"

namespace geoanim::codec {

using json = nlohmann::json;

double round_decimals(double value, int decimals);
inline double num(double v) { return round_decimals(v, 6); }
inline double seconds(double v) { return round_decimals(v, 3); }

/// Keys sorted, no whitespace.
std::string dump(const json& doc);

json to_json(const GeoPoint& p);
GeoPoint point_from_json(const json& j);  // {"lat":..,"lon":..}

json to_json(const BoundingBox& box);
BoundingBox bbox_from_json(const json& j);

/// GeoJSON geometry object.
json geometry_to_geojson(const GeoShape& shape);
/// Accepts Point, LineString, Polygon, MultiPolygon. Open rings are closed.
/// Other geometry types raise UnsupportedGeometryError.
GeoShape shape_from_geojson_geometry(const json& geometry);

/// GeoJSON Feature: geometry plus string properties.
json to_json(const GeoShape& shape);
GeoShape shape_from_json(const json& j);

json to_json(const StyleOverrides& style);
StyleOverrides style_from_json(const json& j);

json args_to_json(const BlockArgs& args);
BlockArgs args_from_json(BlockKind kind, const json& j);

json to_json(const AnimationBlock& block);
AnimationBlock block_from_json(const json& j);

json to_json(const Timeline& timeline);
Timeline timeline_from_json(const json& j);

json to_json(const SceneBreakdownItem& item);
SceneBreakdownItem item_from_json(const json& j);

json to_json(const SceneBreakdown& breakdown);
SceneBreakdown breakdown_from_json(const json& j);

json to_json(const GeocodeRequest& req);
GeocodeRequest geocode_request_from_json(const json& j);

json to_json(const GeoAction& action);
GeoAction action_from_json(const json& j);

json to_json(const ChatMessage& m);
ChatMessage message_from_json(const json& j);

json to_json(const ResearchSession& session);
ResearchSession session_from_json(const json& j);

json to_json(const Project& project);
Project project_from_json(const json& j);

json to_json(const Edit& edit);
Edit edit_from_json(const json& j);

json to_json(const ValidationReport& report);

std::string serialize(const Project& project);
Project parse_project(const std::string& text);

}  // namespace geoanim::codec
