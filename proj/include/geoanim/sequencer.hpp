#pragma once

// Pure frame evaluation: timeline + time -> camera and overlay states.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoanim/geometry.hpp"
#include "geoanim/model.hpp"

namespace geoanim::sequencer {

struct CameraState {
  GeoPoint center;
  double zoom = 0.0;     // 0..22
  double bearing = 0.0;  // [0, 360)
  double pitch = 0.0;    // 0..60
  friend bool operator==(const CameraState&, const CameraState&) = default;
};

struct Pose {
  GeoPoint position;
  double heading = 0.0;
  friend bool operator==(const Pose&, const Pose&) = default;
};

struct ClusterPose {
  GeoPoint position;
  double phase = 0.0;  // [0, 1)
  friend bool operator==(const ClusterPose&, const ClusterPose&) = default;
};

struct OverlayState {
  std::string block_id;
  BlockKind kind = BlockKind::highlight_point;
  GeoShape shape;
  double progress = 0.0;
  std::optional<Pose> sprite_pose;                 // element_route only
  std::optional<std::vector<ClusterPose>> cluster_poses;  // element_auxiliary_motion only
  std::optional<std::string> sprite;
  StyleOverrides style;  // opacity after fade
  friend bool operator==(const OverlayState&, const OverlayState&) = default;
};

struct Frame {
  double t = 0.0;
  CameraState camera;
  std::vector<OverlayState> overlays;  // by block start_time
  friend bool operator==(const Frame&, const Frame&) = default;
};

struct Options {
  CameraState world_view{{20.0, 0.0}, 1.5, 0.0, 0.0};
  double fade_in_seconds = 0.3;
  double rho = 1.42;               // van Wijk-Nuij curvature
  double cluster_period_seconds = 6.0;
};

double ease_in_out_cubic(double x);

/// Camera block at local progress, starting from `previous` (the final state
/// of the prior camera block or the world view). Throws ContractViolation for
/// non-camera blocks.
CameraState camera_state(const AnimationBlock& block, double progress, const CameraState& previous,
                         const Options& options = {});

/// State a camera block ends in.
CameraState final_camera_state(const AnimationBlock& block, const CameraState& previous, const Options& options = {});

/// Overlay for a highlight or element block. Throws ContractViolation for
/// camera blocks.
OverlayState element_state(const AnimationBlock& block, double progress, const Options& options = {});

/// Timeline with per-block precomputation (camera start states, morph
/// correspondences); evaluation through it is equal to evaluate().
class PreparedTimeline {
 public:
  explicit PreparedTimeline(Timeline timeline, Options options = {});

  Frame evaluate(double t) const;
  const Timeline& timeline() const { return timeline_; }

 private:
  struct CameraEntry {
    std::size_t index;
    CameraState start;
    CameraState end;
  };
  OverlayState overlay(const AnimationBlock& block, double progress) const;

  Timeline timeline_;
  Options options_;
  std::vector<CameraEntry> cameras_;  // by (start_time, position)
  std::vector<std::size_t> elements_;  // non-camera blocks by (start_time, position)
  std::map<std::string, geometry::RingCorrespondence> morphs_;
};

/// Throws PreconditionError for t < 0 or a non-finite t.
Frame evaluate(const Timeline& timeline, double t, const Options& options = {});

/// Frame times 0, 1/fps, ...: floor(duration * fps) + 1 of them.
std::vector<double> frame_times(double duration, int fps);

/// One canonical Frame per line. Throws ValidationError for fps < 1.
void export_frames(const Timeline& timeline, int fps, std::ostream& out, const Options& options = {});
std::string export_frames(const Timeline& timeline, int fps, const Options& options = {});

nlohmann::json to_json(const CameraState& camera);
nlohmann::json to_json(const OverlayState& overlay);
nlohmann::json to_json(const Frame& frame);

}  // namespace geoanim::sequencer
