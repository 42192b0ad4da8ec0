#include "geoanim/timeline.hpp"

#include <algorithm>
#include <map>

#include "geoanim/errors.hpp"

namespace geoanim {

const char* to_string(Severity severity) { return severity == Severity::error ? "error" : "warning"; }

bool ValidationReport::has_errors() const { return count(Severity::error) > 0; }

std::size_t ValidationReport::count(Severity severity) const {
  return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                [&](const Violation& v) { return v.severity == severity; }));
}

namespace {

bool timing_sane(const AnimationBlock& b) {
  return std::isfinite(b.start_time) && std::isfinite(b.end_time) && b.end_time > b.start_time;
}

bool overlaps(const AnimationBlock& a, const AnimationBlock& b) {
  return a.start_time < b.end_time && b.start_time < a.end_time;
}

std::string interval(const AnimationBlock& b) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "[%.3f, %.3f)", b.start_time, b.end_time);
  return buf;
}

}  // namespace

ValidationReport validate_timeline(const Timeline& timeline, const ValidationOptions& options) {
  ValidationReport report;
  const auto& blocks = timeline.blocks;

  std::map<std::string, int> seen;
  for (const auto& b : blocks) {
    if (++seen[b.id] == 2) {
      report.violations.push_back({Severity::error, "duplicate_id", {b.id}, "block id '" + b.id + "' is not unique"});
    }
  }

  for (const auto& b : blocks) {
    for (auto& problem : block_problems(b)) {
      report.violations.push_back({Severity::error, "invariant", {b.id}, problem});
    }
  }

  // Pairwise checks in start order so reports are stable under list reordering.
  std::vector<const AnimationBlock*> order;
  for (const auto& b : blocks)
    if (timing_sane(b)) order.push_back(&b);
  std::stable_sort(order.begin(), order.end(), [](const AnimationBlock* a, const AnimationBlock* b) {
    if (a->start_time != b->start_time) return a->start_time < b->start_time;
    return a->id < b->id;
  });

  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const auto& a = *order[i];
      const auto& b = *order[j];
      if (b.start_time >= a.end_time) continue;
      // Camera blocks may overlap content; everything else is exclusive.
      if (is_camera(a.kind) != is_camera(b.kind)) continue;
      if (!overlaps(a, b)) continue;
      report.violations.push_back({Severity::error, "overlap", {a.id, b.id},
                                   std::string(to_string(a.kind)) + " " + interval(a) + " overlaps " +
                                       to_string(b.kind) + " " + interval(b)});
    }
  }

  for (const auto* content : order) {
    if (is_camera(content->kind)) continue;
    const double t = content->start_time;
    bool framed = false;
    for (const auto* cam : order) {
      if (!is_camera(cam->kind)) continue;
      if (cam->active_at(t) || (cam->end_time <= t && t - cam->end_time <= options.camera_lead_window)) {
        framed = true;
        break;
      }
    }
    if (!framed) {
      report.violations.push_back({Severity::warning, "camera_lead", {content->id},
                                   std::string(to_string(content->kind)) + " " + interval(*content) +
                                       " is not preceded by a camera block"});
    }
  }
  return report;
}

namespace {

std::size_t index_of(const Timeline& timeline, const std::string& id) {
  for (std::size_t i = 0; i < timeline.blocks.size(); ++i)
    if (timeline.blocks[i].id == id) return i;
  throw NotFoundError("unknown block id '" + id + "'", {{"block_id", id}});
}

void require_valid(const AnimationBlock& block) {
  auto problems = block_problems(block);
  if (!problems.empty()) {
    throw InvariantError("edit breaks block '" + block.id + "': " + problems.front(),
                         {{"block_id", block.id}, {"problems", problems}});
  }
}

}  // namespace

Timeline apply_edit(const Timeline& timeline, const Edit& edit) {
  Timeline out = timeline;
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, edits::Retime>) {
          auto& b = out.blocks[index_of(out, e.id)];
          if (!(e.end_time > e.start_time) || e.start_time < 0.0) {
            throw InvariantError("retime of '" + e.id + "' needs 0 <= start < end",
                                 {{"block_id", e.id}, {"start_time", e.start_time}, {"end_time", e.end_time}});
          }
          b.start_time = e.start_time;
          b.end_time = e.end_time;
        } else if constexpr (std::is_same_v<T, edits::Reorder>) {
          auto from = index_of(out, e.id);
          auto to = std::min(e.index, out.blocks.size() - 1);
          auto moved = std::move(out.blocks[from]);
          out.blocks.erase(out.blocks.begin() + static_cast<std::ptrdiff_t>(from));
          out.blocks.insert(out.blocks.begin() + static_cast<std::ptrdiff_t>(to), std::move(moved));
        } else if constexpr (std::is_same_v<T, edits::Delete>) {
          out.blocks.erase(out.blocks.begin() + static_cast<std::ptrdiff_t>(index_of(out, e.id)));
        } else if constexpr (std::is_same_v<T, edits::UpdateArgs>) {
          auto& b = out.blocks[index_of(out, e.id)];
          if (args_kind(e.args) != b.kind) {
            throw InvariantError("args tag does not match block kind",
                                 {{"block_id", e.id}, {"kind", to_string(b.kind)}});
          }
          b.args = e.args;
          require_valid(b);
        } else if constexpr (std::is_same_v<T, edits::UpdateStyle>) {
          auto& b = out.blocks[index_of(out, e.id)];
          b.style = e.style;
          require_valid(b);
        } else if constexpr (std::is_same_v<T, edits::Insert>) {
          if (out.find(e.block.id)) {
            throw InvariantError("block id '" + e.block.id + "' already exists", {{"block_id", e.block.id}});
          }
          require_valid(e.block);
          auto at = std::min(e.index.value_or(out.blocks.size()), out.blocks.size());
          out.blocks.insert(out.blocks.begin() + static_cast<std::ptrdiff_t>(at), e.block);
        }
      },
      edit);
  return out;
}

}  // namespace geoanim
