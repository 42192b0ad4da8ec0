#pragma once

// Per-block research: one tool (resolve_geojson) whose arguments describe a
// GeoAction plus display parameters; the engine executes the action against
// the geocoder and geometry modules and attaches the result to the item.

#include <optional>
#include <string>
#include <vector>

#include "geoanim/geocoder.hpp"
#include "geoanim/llm.hpp"
#include "geoanim/model.hpp"

namespace geoanim {

/// Consecutive generated waypoints must be closer than this.
inline constexpr double kMaxHopKm = 2000.0;

struct ActionResult {
  GeoShape shape;
  std::vector<std::string> citations;
};

/// Throws ValidationError for malformed actions (fewer than two sub-queries
/// or waypoints, coordinates out of range, a hop of kMaxHopKm or more; the
/// detail names the 1-based hop) and ActionFailedError when a lookup comes
/// back empty or a boolean operation leaves nothing.
ActionResult execute_action(const GeoAction& action, Geocoder& geocoder);

/// Tool arguments -> action. Throws ValidationError naming missing pieces.
GeoAction action_from_tool_args(const nlohmann::json& args);

/// The researcher tool for one block kind.
llm::ToolSchema researcher_tool(BlockKind kind);

/// Explicit "zoom level N" in free text.
std::optional<double> zoom_hint(const std::string& text);

/// Zoom that fits a bounding box on screen, 2..16 in half steps.
double fit_zoom(const BoundingBox& box);

struct ResearchOutcome {
  ResearchSession session;
  SceneBreakdownItem item;  // args/style/resolved updated on success
};

struct ChatOutcome {
  std::string reply;
  bool updated = false;
  ResearchSession session;
  SceneBreakdownItem item;
};

class ResearcherAgent {
 public:
  /// One repair re-prompt after a failed tool call.
  static constexpr int kMaxRepairs = 1;

  ResearcherAgent(llm::Gateway& gateway, Geocoder& geocoder);

  /// Never throws for model or action failures: they end up in
  /// session.error with item.resolved == false. Transport and fixture
  /// errors propagate.
  ResearchOutcome research_block(const SceneBreakdownItem& item, const SceneBreakdown& context);

  /// Blank messages raise ValidationError and leave everything unchanged.
  ChatOutcome chat(const ResearchSession& session, const SceneBreakdownItem& item, const std::string& message);

  llm::ChatRequest base_request(const SceneBreakdownItem& item) const;

 private:
  struct Turn {
    std::optional<std::string> text;
    bool applied = false;
    std::optional<std::string> error;
  };
  Turn converse(llm::ChatRequest req, ResearchSession& session, SceneBreakdownItem& item, bool allow_text);

  llm::Gateway& gateway_;
  Geocoder& geocoder_;
};

/// Symmetric maximum deviation between two polylines in kilometres: each
/// line is densified at `step_km` and every sample's distance to the other
/// line's nearest segment is taken.
double route_deviation_km(const std::vector<GeoPoint>& a, const std::vector<GeoPoint>& b, double step_km = 0.5);

}  // namespace geoanim
