#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "densemap/image.hpp"

namespace densemap {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rectified stereo camera. Metric quantities are in millimeters.
struct StereoRig {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double baseline = 0.0;
  int width = 0;
  int height = 0;

  static StereoRig make(double focal_px, double baseline_mm, int width, int height);

  double focal_length_px() const { return fx; }
  Mat3 intrinsics() const;
  Mat3 inverse_intrinsics() const;

  /// Throws InvalidArgument when any invariant is broken.
  void validate() const;

  bool contains(const Vec2& pixel) const {
    return pixel.x() >= 0.0 && pixel.y() >= 0.0 && pixel.x() <= width - 1 && pixel.y() <= height - 1;
  }
};

/// Rigid camera-to-world transform.
class Pose {
 public:
  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  /// Throws InvalidArgument unless rotation is orthonormal with det +1 (1e-9).
  Pose(const Mat3& rotation, const Vec3& translation);

  /// Quaternion (x, y, z, w); normalized before use.
  static Pose from_quaternion(double qx, double qy, double qz, double qw, const Vec3& translation);
  static Pose from_translation(const Vec3& translation) { return Pose(Mat3::Identity(), translation); }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(rotation_); }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Pose inverse() const;
  Pose compose(const Pose& rhs) const;  // this * rhs
  Pose operator*(const Pose& rhs) const { return compose(rhs); }

  /// Largest absolute element difference of the 3x4 matrices.
  double max_abs_diff(const Pose& other) const;

  /// Geodesic angle between two rotations in radians.
  double angle_to(const Pose& other) const;
  double distance_to(const Pose& other) const { return (translation_ - other.translation_).norm(); }

 private:
  struct Unchecked {};
  Pose(const Mat3& rotation, const Vec3& translation, Unchecked)
      : rotation_(rotation), translation_(translation) {}

  Mat3 rotation_;
  Vec3 translation_;
};

/// Per-pixel metric depth with validity mask. Invalid pixels hold 0.
struct DepthField {
  Image<double> depth;
  Image<std::uint8_t> valid_mask;

  DepthField() = default;
  DepthField(int width, int height) : depth(width, height, 0.0), valid_mask(width, height, 0) {}

  int width() const { return depth.width(); }
  int height() const { return depth.height(); }
  bool valid(int x, int y) const { return valid_mask(x, y) != 0; }
  void set(int x, int y, double d) {
    depth(x, y) = d;
    valid_mask(x, y) = 1;
  }
  std::size_t valid_count() const;
};

inline constexpr double kDefaultDisparityFloor = 0.1;

/// f*b/disparity, or nullopt when disparity does not exceed the floor.
std::optional<double> triangulate_depth(const StereoRig& rig, double disparity,
                                        double disparity_floor = kDefaultDisparityFloor);

/// World point seen at pixel with camera-frame depth (mm). Throws on
/// non-positive depth or out-of-bounds pixel.
Vec3 backproject_point(const StereoRig& rig, const Pose& pose, const Vec2& pixel, double depth);

struct Projection {
  Vec2 pixel;
  double depth = 0.0;
};

/// Camera-frame projection of a world point; nullopt when behind the camera.
std::optional<Projection> project_point(const StereoRig& rig, const Pose& pose, const Vec3& world_point);

}  // namespace densemap
