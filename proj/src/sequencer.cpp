#include "geoanim/sequencer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "geoanim/codec.hpp"
#include "geoanim/errors.hpp"
#include "geoanim/ids.hpp"

namespace geoanim::sequencer {
namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;
constexpr double kMaxMercatorLat = 85.05112878;

double clamp01(double x) { return std::clamp(std::isfinite(x) ? x : 0.0, 0.0, 1.0); }

double wrap_bearing(double b) {
  double r = std::fmod(b, 360.0);
  if (r < 0) r += 360.0;
  return r >= 360.0 ? 0.0 : r;
}

double wrap_lon(double lon) {
  double r = std::fmod(lon + 180.0, 360.0);
  if (r < 0) r += 360.0;
  return r - 180.0;
}

// Web Mercator in unit-square world coordinates.
struct Merc {
  double x, y;
};

Merc to_merc(const GeoPoint& p) {
  const double lat = std::clamp(p.lat, -kMaxMercatorLat, kMaxMercatorLat) * kPi / 180.0;
  return {(p.lon + 180.0) / 360.0, (1.0 - std::log(std::tan(kPi / 4 + lat / 2)) / kPi) / 2.0};
}

GeoPoint from_merc(const Merc& m) {
  const double lat = std::atan(std::sinh(kPi * (1.0 - 2.0 * m.y))) * 180.0 / kPi;
  return {lat, wrap_lon(m.x * 360.0 - 180.0)};
}

const AnimationBlock& require_camera(const AnimationBlock& block) {
  if (!is_camera(block.kind)) throw ContractViolation("block " + block.id + " is not a camera block");
  return block;
}

// van Wijk & Nuij smooth zoom-and-pan between (c0, z0) and (c1, z1); s in [0, 1].
CameraState zoom_pan(const CameraState& from, const GeoPoint& target, double zoom, double s, double rho) {
  Merc m0 = to_merc(from.center);
  Merc m1 = to_merc(target);
  if (m1.x - m0.x > 0.5) m1.x -= 1.0;  // shortest way round
  if (m0.x - m1.x > 0.5) m1.x += 1.0;
  const double w0 = std::exp2(-from.zoom), w1 = std::exp2(-zoom);
  const double dx = m1.x - m0.x, dy = m1.y - m0.y;
  const double d2 = dx * dx + dy * dy;
  const double rho2 = rho * rho, rho4 = rho2 * rho2;
  double u, w;
  if (d2 < 1e-24) {
    const double S = std::log(w1 / w0) / rho;
    u = s;
    w = w0 * std::exp(rho * s * S);
  } else {
    const double d1 = std::sqrt(d2);
    const double b0 = (w1 * w1 - w0 * w0 + rho4 * d2) / (2 * w0 * rho2 * d1);
    const double b1 = (w1 * w1 - w0 * w0 - rho4 * d2) / (2 * w1 * rho2 * d1);
    const double r0 = std::log(std::sqrt(b0 * b0 + 1) - b0);
    const double r1 = std::log(std::sqrt(b1 * b1 + 1) - b1);
    const double S = (r1 - r0) / rho;
    const double r = rho * s * S + r0;
    u = w0 / (rho2 * d1) * (std::cosh(r0) * std::tanh(r) - std::sinh(r0));
    w = w0 * std::cosh(r0) / std::cosh(r);
  }
  CameraState out = from;
  out.center = from_merc({m0.x + u * dx, m0.y + u * dy});
  out.zoom = std::clamp(-std::log2(w), 0.0, 22.0);
  return out;
}

GeoShape box_shape(const BoundingBox& b) {
  return GeoShape::make_polygon(
      {{b.min.lat, b.min.lon}, {b.min.lat, b.max.lon}, {b.max.lat, b.max.lon}, {b.max.lat, b.min.lon}, {b.min.lat, b.min.lon}});
}

double unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

std::vector<ClusterPose> cluster(const AuxiliaryMotionArgs& a, double elapsed, double period) {
  std::vector<ClusterPose> poses;
  const GeoPoint c{(a.region.min.lat + a.region.max.lat) / 2, (a.region.min.lon + a.region.max.lon) / 2};
  const double half_lat = (a.region.max.lat - a.region.min.lat) / 2;
  const double half_lon = (a.region.max.lon - a.region.min.lon) / 2;
  for (int k = 0; k < a.cluster_count; ++k) {
    // Counter-based draws: draw(j) depends only on seed, sprite and j.
    auto draw = [&](int j) { return unit(mix64(a.seed ^ mix64(static_cast<std::uint64_t>(k) * 16 + j))); };
    const double fa = 1 + std::floor(draw(0) * 3), fb = 1 + std::floor(draw(1) * 3);
    const double delta = draw(2) * 2 * kPi;
    const double amp_lat = half_lat * (0.3 + 0.6 * draw(3)), amp_lon = half_lon * (0.3 + 0.6 * draw(4));
    const double offset = draw(5);
    const double loops = elapsed / period + offset;
    const double phase = loops - std::floor(loops);
    const double theta = 2 * kPi * phase;
    poses.push_back({{c.lat + amp_lat * std::sin(fa * theta + delta), c.lon + amp_lon * std::sin(fb * theta)}, phase});
  }
  return poses;
}

OverlayState base_overlay(const AnimationBlock& block, double progress) {
  if (is_camera(block.kind)) throw ContractViolation("block " + block.id + " is a camera block");
  OverlayState o;
  o.block_id = block.id;
  o.kind = block.kind;
  o.progress = clamp01(progress);
  o.style = block.style;
  return o;
}

OverlayState finish_overlay(OverlayState o, const AnimationBlock& block, const Options& options,
                            const geometry::RingCorrespondence* corr) {
  const double p = o.progress;
  const double elapsed = p * block.duration();
  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, HighlightAreaArgs>) {
          o.shape = a.shape;
        } else if constexpr (std::is_same_v<T, HighlightLineArgs>) {
          o.shape = a.path;
        } else if constexpr (std::is_same_v<T, HighlightPointArgs>) {
          o.shape = GeoShape::make_point(a.point);
        } else if constexpr (std::is_same_v<T, ElementRouteArgs>) {
          auto drawn = geometry::path_prefix(a.path.path, p);
          if (drawn.size() == 1) drawn.push_back(drawn.front());
          o.shape = GeoShape::make_line(std::move(drawn));
          const auto head = geometry::point_along(a.path.path, p);
          o.sprite_pose = Pose{head.position, head.heading};
          o.sprite = a.sprite;
        } else if constexpr (std::is_same_v<T, SpatialTransitionArgs>) {
          o.shape = corr ? geometry::interpolate(*corr, p) : geometry::morph(a.from_shape, a.to_shape, p);
        } else if constexpr (std::is_same_v<T, AuxiliaryMotionArgs>) {
          o.shape = box_shape(a.region);
          o.cluster_poses = cluster(a, elapsed, options.cluster_period_seconds);
          o.sprite = a.sprite;
        }
      },
      block.args);
  const bool highlight = category(block.kind) == BlockCategory::highlight;
  if (highlight && options.fade_in_seconds > 0) {
    o.style.opacity = block.style.opacity * std::min(1.0, elapsed / options.fade_in_seconds);
  }
  return o;
}

json point_json(const GeoPoint& p) { return codec::to_json(p); }

}  // namespace

double ease_in_out_cubic(double x) {
  x = clamp01(x);
  return x < 0.5 ? 4 * x * x * x : 1 - std::pow(-2 * x + 2, 3) / 2;
}

CameraState camera_state(const AnimationBlock& block, double progress, const CameraState& previous, const Options& options) {
  require_camera(block);
  const double p = clamp01(progress);
  const double e = ease_in_out_cubic(p);
  CameraState out = previous;
  if (const auto* z = std::get_if<CameraZoomArgs>(&block.args)) {
    if (p >= 1.0) {
      out.center = z->target;
      out.zoom = z->zoom_level;
    } else {
      out = zoom_pan(previous, z->target, z->zoom_level, e, options.rho);
    }
  } else if (const auto* tr = std::get_if<CameraTranslateArgs>(&block.args)) {
    out.center = {tr->from.lat + e * (tr->to.lat - tr->from.lat), tr->from.lon + e * (tr->to.lon - tr->from.lon)};
    out.zoom = tr->zoom_level;
  } else if (const auto* o = std::get_if<CameraOrbitArgs>(&block.args)) {
    const double start = o->start_bearing.value_or(previous.bearing);
    const double sign = o->direction == OrbitDirection::ccw ? 1.0 : -1.0;
    out.center = o->center;
    out.zoom = o->zoom_level;
    out.bearing = start + sign * o->sweep * p;
    if (o->pitch) out.pitch = *o->pitch;
  } else {
    throw ContractViolation("block " + block.id + " has arguments of another kind");
  }
  out.bearing = wrap_bearing(out.bearing);
  out.zoom = std::clamp(out.zoom, 0.0, 22.0);
  out.pitch = std::clamp(out.pitch, 0.0, 60.0);
  return out;
}

CameraState final_camera_state(const AnimationBlock& block, const CameraState& previous, const Options& options) {
  return camera_state(block, 1.0, previous, options);
}

OverlayState element_state(const AnimationBlock& block, double progress, const Options& options) {
  return finish_overlay(base_overlay(block, progress), block, options, nullptr);
}

PreparedTimeline::PreparedTimeline(Timeline timeline, Options options)
    : timeline_(std::move(timeline)), options_(std::move(options)) {
  const auto& blocks = timeline_.blocks;
  std::vector<std::size_t> order(blocks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return blocks[a].start_time < blocks[b].start_time; });
  CameraState state = options_.world_view;
  for (auto i : order) {
    const auto& b = blocks[i];
    if (is_camera(b.kind)) {
      const CameraState end = final_camera_state(b, state, options_);
      cameras_.push_back({i, state, end});
      state = end;
    } else {
      elements_.push_back(i);
      if (const auto* st = std::get_if<SpatialTransitionArgs>(&b.args)) {
        morphs_.emplace(b.id, geometry::correspond(st->from_shape, st->to_shape));
      }
    }
  }
}

OverlayState PreparedTimeline::overlay(const AnimationBlock& block, double progress) const {
  auto it = morphs_.find(block.id);
  return finish_overlay(base_overlay(block, progress), block, options_, it == morphs_.end() ? nullptr : &it->second);
}

Frame PreparedTimeline::evaluate(double t) const {
  if (!std::isfinite(t) || t < 0) throw PreconditionError("frame time must be a finite, non-negative number of seconds");
  Frame f;
  f.t = t;
  f.camera = options_.world_view;
  const auto& blocks = timeline_.blocks;
  // Latest-starting camera with start <= t: active ones are evaluated,
  // finished ones hold their final state.
  for (auto it = cameras_.rbegin(); it != cameras_.rend(); ++it) {
    const auto& b = blocks[it->index];
    if (b.start_time > t) continue;
    f.camera = b.active_at(t) ? camera_state(b, (t - b.start_time) / b.duration(), it->start, options_) : it->end;
    break;
  }
  for (auto i : elements_) {
    const auto& b = blocks[i];
    if (b.active_at(t)) f.overlays.push_back(overlay(b, (t - b.start_time) / b.duration()));
  }
  return f;
}

Frame evaluate(const Timeline& timeline, double t, const Options& options) {
  return PreparedTimeline(timeline, options).evaluate(t);
}

std::vector<double> frame_times(double duration, int fps) {
  if (fps < 1) throw ValidationError("fps must be at least 1", {{"fps", fps}});
  const auto count = static_cast<std::size_t>(std::floor(std::max(0.0, duration) * fps + 1e-9)) + 1;
  std::vector<double> times(count);
  for (std::size_t i = 0; i < count; ++i) times[i] = static_cast<double>(i) / fps;
  return times;
}

void export_frames(const Timeline& timeline, int fps, std::ostream& out, const Options& options) {
  const auto times = frame_times(timeline.duration(), fps);
  const PreparedTimeline prepared(timeline, options);
  for (double t : times) out << codec::dump(to_json(prepared.evaluate(t))) << '\n';
}

std::string export_frames(const Timeline& timeline, int fps, const Options& options) {
  std::ostringstream out;
  export_frames(timeline, fps, out, options);
  return out.str();
}

json to_json(const CameraState& c) {
  double bearing = codec::num(c.bearing);
  if (bearing >= 360.0) bearing = 0.0;
  return json{{"center", point_json(c.center)}, {"zoom", codec::num(c.zoom)}, {"bearing", bearing}, {"pitch", codec::num(c.pitch)}};
}

json to_json(const OverlayState& o) {
  json j{{"block_id", o.block_id},
         {"kind", to_string(o.kind)},
         {"progress", codec::num(o.progress)},
         {"shape", codec::to_json(o.shape)},
         {"style", codec::to_json(o.style)}};
  if (o.sprite_pose) j["sprite_pose"] = {{"position", point_json(o.sprite_pose->position)}, {"heading", codec::num(o.sprite_pose->heading)}};
  if (o.cluster_poses) {
    json poses = json::array();
    for (const auto& p : *o.cluster_poses) poses.push_back({{"position", point_json(p.position)}, {"phase", codec::num(p.phase)}});
    j["cluster_poses"] = std::move(poses);
  }
  if (o.sprite) j["sprite"] = *o.sprite;
  return j;
}

json to_json(const Frame& f) {
  json overlays = json::array();
  for (const auto& o : f.overlays) overlays.push_back(to_json(o));
  return json{{"t", codec::seconds(f.t)}, {"camera", to_json(f.camera)}, {"overlays", std::move(overlays)}};
}

}  // namespace geoanim::sequencer
