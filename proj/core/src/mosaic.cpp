#include "densemap/mosaic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "densemap/ply.hpp"

namespace densemap {

DepthField depth_from_disparity(const StereoRig& rig, const DisparityField& disparity, double disparity_floor) {
  DepthField depth(disparity.width(), disparity.height());
  for (int y = 0; y < disparity.height(); ++y)
    for (int x = 0; x < disparity.width(); ++x) {
      if (!disparity.valid(x, y)) continue;
      if (const auto z = triangulate_depth(rig, disparity.disparity(x, y), disparity_floor)) depth.set(x, y, *z);
    }
  return depth;
}

std::vector<MapPoint> lift_keyframe(const KeyframeRecord& kf, const StereoRig& rig, int subsample_stride) {
  if (subsample_stride < 1) throw InvalidArgument("lift_keyframe: stride must be at least 1");
  const auto& depth = kf.depth;
  const bool has_color = kf.color.same_shape(depth.depth);
  std::vector<MapPoint> points;
  for (int y = 0; y < depth.height(); y += subsample_stride)
    for (int x = 0; x < depth.width(); x += subsample_stride) {
      if (!depth.valid(x, y)) continue;
      MapPoint p;
      p.position = backproject_point(rig, kf.pose, Vec2(x, y), depth.depth(x, y));
      p.color = has_color ? kf.color(x, y) : Rgb{255, 255, 255};
      p.source_keyframe = kf.index;
      points.push_back(p);
    }
  return points;
}

bool lands_on_valid_depth(const StereoRig& rig, const Pose& world_to_camera, const DepthField& depth,
                          const Vec3& point, const CullingOptions& options) {
  const Vec3 cam = world_to_camera.apply(point);
  if (!(cam.z() > 0.0)) return false;
  const double u = rig.fx * cam.x() / cam.z() + rig.cx;
  const double v = rig.fy * cam.y() / cam.z() + rig.cy;
  const double ur = std::round(u), vr = std::round(v);
  if (!(ur >= 0.0 && vr >= 0.0 && ur < depth.width() && vr < depth.height())) return false;
  const int x = static_cast<int>(ur), y = static_cast<int>(vr);
  if (!depth.valid(x, y)) return false;
  if (options.depth_gated) return std::abs(depth.depth(x, y) - cam.z()) <= options.depth_tolerance_mm;
  return true;
}

MosaicStats GlobalMap::update(const KeyframeRecord& kf, std::vector<MapPoint> new_points, const StereoRig& rig,
                              const CullingOptions& options) {
  if (std::find(keyframe_log_.begin(), keyframe_log_.end(), kf.index) != keyframe_log_.end())
    throw InvalidArgument("mosaic_update: keyframe " + std::to_string(kf.index) + " already processed");
  MosaicStats stats;
  stats.added = new_points.size();
  if (keyframe_log_.empty()) {
    points_ = std::move(new_points);
  } else {
    const Pose world_to_camera = kf.pose.inverse();
    const auto kept_end = std::remove_if(points_.begin(), points_.end(), [&](const MapPoint& p) {
      return lands_on_valid_depth(rig, world_to_camera, kf.depth, p.position, options);
    });
    stats.culled = static_cast<std::size_t>(points_.end() - kept_end);
    points_.erase(kept_end, points_.end());
    points_.insert(points_.end(), std::make_move_iterator(new_points.begin()),
                   std::make_move_iterator(new_points.end()));
  }
  keyframe_log_.push_back(kf.index);
  return stats;
}

MosaicStats mosaic_update(GlobalMap& map, const KeyframeRecord& kf, std::vector<MapPoint> new_points,
                          const StereoRig& rig, const CullingOptions& options) {
  return map.update(kf, std::move(new_points), rig, options);
}

void export_ply(const GlobalMap& map, const std::filesystem::path& path) { write_ply(path, map.points()); }

}  // namespace densemap
