#include "densemap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace densemap {

StereoRig StereoRig::make(double focal_px, double baseline_mm, int width, int height) {
  StereoRig rig;
  rig.fx = focal_px;
  rig.fy = focal_px;
  rig.cx = 0.5 * (width - 1);
  rig.cy = 0.5 * (height - 1);
  rig.baseline = baseline_mm;
  rig.width = width;
  rig.height = height;
  rig.validate();
  return rig;
}

Mat3 StereoRig::intrinsics() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Mat3 StereoRig::inverse_intrinsics() const {
  Mat3 k;
  k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return k;
}

void StereoRig::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("StereoRig: focal lengths must be positive");
  if (!(baseline > 0.0)) throw InvalidArgument("StereoRig: baseline must be positive");
  if (width <= 0 || height <= 0) throw InvalidArgument("StereoRig: image dimensions must be positive");
  if (!std::isfinite(cx) || !std::isfinite(cy)) throw InvalidArgument("StereoRig: principal point not finite");
}

Pose::Pose(const Mat3& rotation, const Vec3& translation) : rotation_(rotation), translation_(translation) {
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= 1e-9) || std::abs(rotation.determinant() - 1.0) > 1e-9)
    throw InvalidArgument("Pose: rotation is not a proper orthonormal matrix");
  if (!translation.allFinite()) throw InvalidArgument("Pose: translation not finite");
}

Pose Pose::from_quaternion(double qx, double qy, double qz, double qw, const Vec3& translation) {
  Eigen::Quaterniond q(qw, qx, qy, qz);
  const double n = q.norm();
  if (!(n > 1e-12) || !std::isfinite(n)) throw InvalidArgument("Pose: degenerate quaternion");
  q.coeffs() /= n;
  return Pose(q.toRotationMatrix(), translation);
}

Pose Pose::inverse() const {
  const Mat3 rt = rotation_.transpose();
  return Pose(rt, -(rt * translation_), Unchecked{});
}

Pose Pose::compose(const Pose& rhs) const {
  return Pose(rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_, Unchecked{});
}

double Pose::max_abs_diff(const Pose& other) const {
  return std::max((rotation_ - other.rotation_).cwiseAbs().maxCoeff(),
                  (translation_ - other.translation_).cwiseAbs().maxCoeff());
}

double Pose::angle_to(const Pose& other) const {
  const Mat3 rel = rotation_.transpose() * other.rotation_;
  const double c = std::clamp(0.5 * (rel.trace() - 1.0), -1.0, 1.0);
  return std::acos(c);
}

std::size_t DepthField::valid_count() const {
  std::size_t n = 0;
  for (auto v : valid_mask.pixels()) n += v != 0;
  return n;
}

std::optional<double> triangulate_depth(const StereoRig& rig, double disparity, double disparity_floor) {
  if (!(disparity > disparity_floor)) return std::nullopt;
  return rig.fx * rig.baseline / disparity;
}

Vec3 backproject_point(const StereoRig& rig, const Pose& pose, const Vec2& pixel, double depth) {
  if (!(depth > 0.0) || !std::isfinite(depth)) throw InvalidArgument("backproject_point: depth must be positive");
  if (!rig.contains(pixel))
    throw InvalidArgument("backproject_point: pixel (" + std::to_string(pixel.x()) + ", " +
                          std::to_string(pixel.y()) + ") outside image");
  const Vec3 ray((pixel.x() - rig.cx) / rig.fx, (pixel.y() - rig.cy) / rig.fy, 1.0);
  return pose.apply(depth * ray);
}

std::optional<Projection> project_point(const StereoRig& rig, const Pose& pose, const Vec3& world_point) {
  const Vec3 cam = pose.inverse().apply(world_point);
  if (!(cam.z() > 0.0)) return std::nullopt;
  return Projection{Vec2(rig.fx * cam.x() / cam.z() + rig.cx, rig.fy * cam.y() / cam.z() + rig.cy), cam.z()};
}

}  // namespace densemap
