#pragma once

// Scene planning: script -> ordered breakdown items (one chat exchange), and
// deterministic compilation of resolved items into a timed Timeline.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "geoanim/llm.hpp"
#include "geoanim/model.hpp"

namespace geoanim {

struct BreakdownOptions {
  double target_duration = 30.0;
  double default_block_seconds = 4.0;
  double camera_lead_seconds = 0.5;

  /// Throws ValidationError unless all values are positive and the lead
  /// fits inside the target.
  void validate() const;
};

namespace item_edits {
struct Delete {
  std::string id;
};
struct Move {
  std::string id;
  std::size_t index = 0;
};
struct Update {
  std::string id;
  std::optional<BlockKind> kind;
  std::optional<std::string> short_description;
  std::optional<std::string> long_description;
  std::optional<std::string> user_notes;
};
struct Insert {
  SceneBreakdownItem item;  // empty id gets a fresh one
  std::optional<std::size_t> index;
};
}  // namespace item_edits

using ItemEdit = std::variant<item_edits::Delete, item_edits::Move, item_edits::Update, item_edits::Insert>;

/// Pure. Throws NotFoundError for unknown ids. An Update that changes kind
/// or long_description clears the attached research (resolved, args).
SceneBreakdown apply_item_edits(const SceneBreakdown& breakdown, const std::vector<ItemEdit>& edits);

/// Seconds requested in a description ("duration 5s", "duration: 2.5 seconds").
std::optional<double> duration_hint(const std::string& text);

class BreakdownAgent {
 public:
  static constexpr int kMaxRepairs = 2;

  explicit BreakdownAgent(llm::Gateway& gateway);

  /// One chat exchange plus at most kMaxRepairs repair re-prompts.
  /// PreconditionError for a blank script (no request is made);
  /// BreakdownFailedError once repairs are exhausted.
  SceneBreakdown breakdown(const std::string& script, const BreakdownOptions& options = {});

  /// Applies the edits, then asks the model to re-plan the edited list.
  /// Items with user_notes must come back with their id and kind.
  SceneBreakdown regenerate(const SceneBreakdown& breakdown, const std::vector<ItemEdit>& edits,
                            const std::string& script);

  static const llm::ToolSchema& tool();
  llm::ChatRequest initial_request(const std::string& script, const BreakdownOptions& options) const;

 private:
  llm::Gateway& gateway_;
};

/// Pure scheduling, no model call. `script`, when given, must hash to the
/// breakdown's source_script_hash. CompileBlockedError names the first
/// unresolved item.
Timeline compile(const SceneBreakdown& breakdown, const BreakdownOptions& options = {},
                 const std::string* script = nullptr);

}  // namespace geoanim
