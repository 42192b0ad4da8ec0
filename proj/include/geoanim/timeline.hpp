#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "geoanim/model.hpp"

namespace geoanim {

struct ValidationOptions {
  /// A content block passes the camera-precedes rule when a camera block is
  /// active at its start or ended at most this many seconds before it.
  double camera_lead_window = 0.5;
};

enum class Severity { error, warning };
const char* to_string(Severity severity);

struct Violation {
  Severity severity = Severity::error;
  std::string code;  // "overlap", "camera_lead", "invariant", "duplicate_id"
  std::vector<std::string> block_ids;
  std::string message;
  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool has_errors() const;
  std::size_t count(Severity severity) const;
  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

/// Never throws: every problem is reported as a violation. Overlap and
/// invariant failures are errors; the camera-precedes heuristic is a warning.
ValidationReport validate_timeline(const Timeline& timeline, const ValidationOptions& options = {});

namespace edits {
struct Retime {
  std::string id;
  double start_time = 0.0;
  double end_time = 0.0;
};
struct Reorder {
  std::string id;
  std::size_t index = 0;
};
struct Delete {
  std::string id;
};
struct UpdateArgs {
  std::string id;
  BlockArgs args;
};
struct UpdateStyle {
  std::string id;
  StyleOverrides style;
};
struct Insert {
  AnimationBlock block;
  std::optional<std::size_t> index;  // appended when unset
};
}  // namespace edits

using Edit = std::variant<edits::Retime, edits::Reorder, edits::Delete, edits::UpdateArgs,
                          edits::UpdateStyle, edits::Insert>;

/// Pure: returns a new timeline, untouched blocks are copied verbatim.
/// Throws NotFoundError for unknown ids and InvariantError when the edit
/// would break a block invariant (end <= start, args tag mismatch, duplicate id).
Timeline apply_edit(const Timeline& timeline, const Edit& edit);

}  // namespace geoanim
