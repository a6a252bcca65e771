#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "densemap/disparity.hpp"
#include "densemap/geometry.hpp"
#include "densemap/image.hpp"

namespace densemap {

struct MapPoint {
  Vec3 position = Vec3::Zero();
  Rgb color{0, 0, 0};
  int source_keyframe = -1;
};

struct KeyframeRecord {
  int index = 0;
  Pose pose;
  DepthField depth;
  ColorImage color;
  DisparityField disparity;
};

struct CullingOptions {
  /// Only cull points whose camera depth agrees with the new depth map
  /// within `depth_tolerance_mm`. Off reproduces plain footprint
  /// substitution.
  bool depth_gated = false;
  double depth_tolerance_mm = 5.0;
};

struct MosaicStats {
  std::size_t culled = 0;
  std::size_t added = 0;
};

/// Colored world-frame point set grown keyframe by keyframe. Points from
/// older keyframes that fall on the valid footprint of a new keyframe's
/// depth map are replaced by the new keyframe's points.
class GlobalMap {
 public:
  const std::vector<MapPoint>& points() const { return points_; }
  const std::vector<int>& keyframe_log() const { return keyframe_log_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  /// Throws InvalidArgument if `kf.index` was already processed.
  MosaicStats update(const KeyframeRecord& kf, std::vector<MapPoint> new_points, const StereoRig& rig,
                     const CullingOptions& options = {});

 private:
  std::vector<MapPoint> points_;
  std::vector<int> keyframe_log_;
};

/// Depth from disparity per pixel; pixels with invalid or too-small
/// disparity stay invalid.
DepthField depth_from_disparity(const StereoRig& rig, const DisparityField& disparity,
                                double disparity_floor = kDefaultDisparityFloor);

/// Lifts every valid depth pixel on the stride grid into the world frame.
std::vector<MapPoint> lift_keyframe(const KeyframeRecord& kf, const StereoRig& rig, int subsample_stride = 2);

/// Free-function form of GlobalMap::update.
MosaicStats mosaic_update(GlobalMap& map, const KeyframeRecord& kf, std::vector<MapPoint> new_points,
                          const StereoRig& rig, const CullingOptions& options = {});

/// True if `point` lands in front of the camera on a valid pixel of
/// `depth` (nearest pixel). This is the culling footprint test.
bool lands_on_valid_depth(const StereoRig& rig, const Pose& world_to_camera, const DepthField& depth,
                          const Vec3& point, const CullingOptions& options = {});

void export_ply(const GlobalMap& map, const std::filesystem::path& path);

}  // namespace densemap
