#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace geoanim {

// ---------------------------------------------------------------------------
// Geography
// ---------------------------------------------------------------------------

/// WGS84 position in degrees. Internal order is (lat, lon); GeoJSON I/O
/// swaps to (lon, lat) at the format boundary.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

bool in_range(const GeoPoint& p);

struct BoundingBox {
  GeoPoint min;
  GeoPoint max;

  bool contains(const GeoPoint& p) const {
    return p.lat >= min.lat && p.lat <= max.lat && p.lon >= min.lon && p.lon <= max.lon;
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

enum class ShapeKind { point, line, polygon, multipolygon };

using Ring = std::vector<GeoPoint>;
/// Outer ring first, holes after.
using PolygonRings = std::vector<Ring>;

/// Tagged geometry. `path` carries point (one vertex) and line shapes;
/// `polygons` carries polygon (exactly one entry) and multipolygon shapes.
/// A multipolygon with no polygons is the empty shape.
struct GeoShape {
  ShapeKind kind = ShapeKind::multipolygon;
  std::vector<GeoPoint> path;
  std::vector<PolygonRings> polygons;
  std::map<std::string, std::string> properties;

  static GeoShape make_point(GeoPoint p);
  static GeoShape make_line(std::vector<GeoPoint> path);
  static GeoShape make_polygon(Ring outer, std::vector<Ring> holes = {});
  static GeoShape make_multipolygon(std::vector<PolygonRings> polygons);
  static GeoShape empty() { return GeoShape{}; }

  bool is_area() const { return kind == ShapeKind::polygon || kind == ShapeKind::multipolygon; }
  bool is_empty() const;
  std::size_t vertex_count() const;

  friend bool operator==(const GeoShape&, const GeoShape&) = default;
};

/// Structural problems with a shape; empty when valid.
std::vector<std::string> shape_problems(const GeoShape& shape);

const char* to_string(ShapeKind kind);
std::optional<ShapeKind> parse_shape_kind(std::string_view name);

// ---------------------------------------------------------------------------
// Blocks
// ---------------------------------------------------------------------------

enum class BlockKind {
  highlight_area,
  highlight_line,
  highlight_point,
  camera_zoom,
  camera_translate,
  camera_orbit,
  element_route,
  element_spatial_transition,
  element_auxiliary_motion,
};

inline constexpr std::array<BlockKind, 9> kAllBlockKinds = {
    BlockKind::highlight_area,   BlockKind::highlight_line,  BlockKind::highlight_point,
    BlockKind::camera_zoom,      BlockKind::camera_translate, BlockKind::camera_orbit,
    BlockKind::element_route,    BlockKind::element_spatial_transition,
    BlockKind::element_auxiliary_motion,
};

enum class BlockCategory { highlight, camera, element };

BlockCategory category(BlockKind kind);
inline bool is_camera(BlockKind kind) { return category(kind) == BlockCategory::camera; }
const char* to_string(BlockKind kind);
const char* to_string(BlockCategory category);
std::optional<BlockKind> parse_block_kind(std::string_view name);

enum class OrbitDirection { cw, ccw };

struct HighlightAreaArgs {
  GeoShape shape;
  friend bool operator==(const HighlightAreaArgs&, const HighlightAreaArgs&) = default;
};
struct HighlightLineArgs {
  GeoShape path;
  friend bool operator==(const HighlightLineArgs&, const HighlightLineArgs&) = default;
};
struct HighlightPointArgs {
  GeoPoint point;
  friend bool operator==(const HighlightPointArgs&, const HighlightPointArgs&) = default;
};
struct CameraZoomArgs {
  GeoPoint target;
  double zoom_level = 10.0;
  friend bool operator==(const CameraZoomArgs&, const CameraZoomArgs&) = default;
};
struct CameraTranslateArgs {
  GeoPoint from;
  GeoPoint to;
  double zoom_level = 10.0;
  friend bool operator==(const CameraTranslateArgs&, const CameraTranslateArgs&) = default;
};
struct CameraOrbitArgs {
  GeoPoint center;
  double zoom_level = 10.0;
  double sweep = 360.0;
  OrbitDirection direction = OrbitDirection::cw;
  std::optional<double> start_bearing;  // continues from the previous camera when unset
  std::optional<double> pitch;          // keeps the previous pitch when unset
  friend bool operator==(const CameraOrbitArgs&, const CameraOrbitArgs&) = default;
};
struct ElementRouteArgs {
  GeoShape path;
  std::optional<std::string> sprite;
  friend bool operator==(const ElementRouteArgs&, const ElementRouteArgs&) = default;
};
struct SpatialTransitionArgs {
  GeoShape from_shape;
  GeoShape to_shape;
  friend bool operator==(const SpatialTransitionArgs&, const SpatialTransitionArgs&) = default;
};
struct AuxiliaryMotionArgs {
  BoundingBox region;
  int cluster_count = 1;
  std::string sprite;
  std::uint64_t seed = 0;
  friend bool operator==(const AuxiliaryMotionArgs&, const AuxiliaryMotionArgs&) = default;
};

/// Alternative index matches the BlockKind enumerator value.
using BlockArgs =
    std::variant<HighlightAreaArgs, HighlightLineArgs, HighlightPointArgs, CameraZoomArgs,
                 CameraTranslateArgs, CameraOrbitArgs, ElementRouteArgs, SpatialTransitionArgs,
                 AuxiliaryMotionArgs>;

inline BlockKind args_kind(const BlockArgs& args) { return static_cast<BlockKind>(args.index()); }

std::vector<std::string> args_problems(const BlockArgs& args);

struct StyleOverrides {
  std::optional<std::string> color;
  double opacity = 1.0;
  std::optional<std::string> label;
  std::optional<std::string> image_asset;
  friend bool operator==(const StyleOverrides&, const StyleOverrides&) = default;
};

struct AnimationBlock {
  std::string id;
  BlockKind kind = BlockKind::highlight_point;
  double start_time = 0.0;
  double end_time = 1.0;
  BlockArgs args;
  StyleOverrides style;

  double duration() const { return end_time - start_time; }
  bool active_at(double t) const { return start_time <= t && t < end_time; }
  friend bool operator==(const AnimationBlock&, const AnimationBlock&) = default;
};

/// Per-block invariant failures (timing, tag agreement, style and args ranges).
std::vector<std::string> block_problems(const AnimationBlock& block);

enum class MapStyle { streets, satellite, light, dark, terrain };
const char* to_string(MapStyle style);
std::optional<MapStyle> parse_map_style(std::string_view name);

struct Timeline {
  std::vector<AnimationBlock> blocks;
  MapStyle map_style = MapStyle::streets;

  /// max end_time over blocks, 0 when empty.
  double duration() const;
  const AnimationBlock* find(std::string_view id) const;
  friend bool operator==(const Timeline&, const Timeline&) = default;
};

// ---------------------------------------------------------------------------
// Scene breakdown
// ---------------------------------------------------------------------------

struct SceneBreakdownItem {
  std::string id;
  BlockKind kind = BlockKind::highlight_point;
  std::string short_description;
  std::string long_description;
  bool resolved = false;
  std::string user_notes;
  std::optional<BlockArgs> args;  // attached by the researcher
  StyleOverrides style;
  friend bool operator==(const SceneBreakdownItem&, const SceneBreakdownItem&) = default;
};

struct SceneBreakdown {
  std::vector<SceneBreakdownItem> items;
  std::string source_script_hash;

  const SceneBreakdownItem* find(std::string_view id) const;
  SceneBreakdownItem* find(std::string_view id);
  friend bool operator==(const SceneBreakdown&, const SceneBreakdown&) = default;
};

// ---------------------------------------------------------------------------
// Research
// ---------------------------------------------------------------------------

struct GeocodeRequest {
  std::string query;
  std::vector<std::string> country_codes;
  std::optional<BoundingBox> viewbox;
  bool bounded = false;
  bool want_polygon = true;
  friend bool operator==(const GeocodeRequest&, const GeocodeRequest&) = default;
};

enum class TravelMode { sea, air, land };
const char* to_string(TravelMode mode);
std::optional<TravelMode> parse_travel_mode(std::string_view name);

struct QueryAction {
  GeocodeRequest request;
  friend bool operator==(const QueryAction&, const QueryAction&) = default;
};
struct AdditionAction {
  std::vector<GeocodeRequest> sub_queries;
  friend bool operator==(const AdditionAction&, const AdditionAction&) = default;
};
struct ReductionAction {
  GeocodeRequest base;
  GeocodeRequest mask;
  friend bool operator==(const ReductionAction&, const ReductionAction&) = default;
};
struct GenerationAction {
  std::vector<GeoPoint> waypoints;
  TravelMode mode = TravelMode::land;
  friend bool operator==(const GenerationAction&, const GenerationAction&) = default;
};

using GeoAction = std::variant<QueryAction, AdditionAction, ReductionAction, GenerationAction>;
const char* action_name(const GeoAction& action);

enum class ChatRole { system, user, assistant, tool };
const char* to_string(ChatRole role);
std::optional<ChatRole> parse_chat_role(std::string_view name);

struct ChatMessage {
  ChatRole role = ChatRole::user;
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ResearchSession {
  std::string block_id;
  std::vector<ChatMessage> messages;
  std::optional<GeoAction> chosen_action;
  std::optional<GeoShape> resolved_shape;
  std::map<std::string, std::string> resolved_params;
  std::vector<std::string> citations;
  std::optional<std::string> error;
  friend bool operator==(const ResearchSession&, const ResearchSession&) = default;
};

// ---------------------------------------------------------------------------
// Project
// ---------------------------------------------------------------------------

struct Project {
  std::string id;
  std::string script;
  SceneBreakdown breakdown;
  Timeline timeline;
  std::map<std::string, ResearchSession> sessions;
  std::map<std::string, std::string> assets;  // id -> raw bytes
  std::int64_t created_ms = 0;
  std::int64_t modified_ms = 0;
  friend bool operator==(const Project&, const Project&) = default;
};

/// Session keys that reference neither a block nor a breakdown item.
std::vector<std::string> dangling_sessions(const Project& project);

}  // namespace geoanim
