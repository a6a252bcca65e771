#include <gtest/gtest.h>

#include <random>

#include "densemap/geometry.hpp"

namespace densemap {
namespace {

StereoRig test_rig() {
  StereoRig rig;
  rig.fx = rig.fy = 450.0;
  rig.cx = 320.0;
  rig.cy = 240.0;
  rig.baseline = 5.0;
  rig.width = 640;
  rig.height = 480;
  return rig;
}

Pose random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Eigen::Quaterniond q(Eigen::Vector4d(u(rng), u(rng), u(rng), u(rng)).normalized());
  return Pose::from_quaternion(q.x(), q.y(), q.z(), q.w(), Vec3(u(rng), u(rng), u(rng)) * 100.0);
}

TEST(Triangulate, EvaluatesFocalTimesBaselineOverDisparity) {
  auto rig = test_rig();
  EXPECT_DOUBLE_EQ(*triangulate_depth(rig, 4.5), 500.0);
  rig.fx = rig.fy = 1.0;
  rig.baseline = 1.0;
  EXPECT_DOUBLE_EQ(*triangulate_depth(rig, 1.0), 1.0);
}

TEST(Triangulate, BelowFloorIsInvalid) {
  const auto rig = test_rig();
  EXPECT_FALSE(triangulate_depth(rig, 0.05));
  EXPECT_FALSE(triangulate_depth(rig, 0.1));
  EXPECT_FALSE(triangulate_depth(rig, -3.0));
  EXPECT_TRUE(triangulate_depth(rig, 0.05, 0.01));
}

TEST(Triangulate, StrictlyDecreasingInDisparity) {
  const auto rig = test_rig();
  double prev = *triangulate_depth(rig, 0.11);
  for (double d = 0.2; d < 200.0; d *= 1.3) {
    const double z = *triangulate_depth(rig, d);
    EXPECT_LT(z, prev);
    prev = z;
  }
}

TEST(Backproject, PrincipalRay) {
  const auto rig = test_rig();
  const Vec3 p = backproject_point(rig, Pose(), Vec2(rig.cx, rig.cy), 10.0);
  EXPECT_NEAR((p - Vec3(0, 0, 10)).norm(), 0.0, 1e-12);
  const Vec3 q = backproject_point(rig, Pose::from_translation(Vec3(0, 0, 5)), Vec2(rig.cx, rig.cy), 10.0);
  EXPECT_NEAR((q - Vec3(0, 0, 15)).norm(), 0.0, 1e-12);
}

TEST(Backproject, SimilarTriangles) {
  StereoRig rig = test_rig();
  rig.fx = rig.fy = 100.0;
  rig.cx = rig.cy = 0.0;
  const Vec3 p = backproject_point(rig, Pose(), Vec2(100.0, 0.0), 10.0);
  EXPECT_NEAR((p - Vec3(10, 0, 10)).norm(), 0.0, 1e-12);
}

TEST(Backproject, RejectsBadInput) {
  const auto rig = test_rig();
  EXPECT_THROW(backproject_point(rig, Pose(), Vec2(10, 10), 0.0), InvalidArgument);
  EXPECT_THROW(backproject_point(rig, Pose(), Vec2(10, 10), -1.0), InvalidArgument);
  EXPECT_THROW(backproject_point(rig, Pose(), Vec2(-1, 10), 5.0), InvalidArgument);
  EXPECT_THROW(backproject_point(rig, Pose(), Vec2(10, 480), 5.0), InvalidArgument);
}

TEST(Project, CenterAndBehindCamera) {
  const auto rig = test_rig();
  const auto proj = project_point(rig, Pose(), Vec3(0, 0, 10));
  ASSERT_TRUE(proj);
  EXPECT_NEAR(proj->pixel.x(), 320.0, 1e-12);
  EXPECT_NEAR(proj->pixel.y(), 240.0, 1e-12);
  EXPECT_DOUBLE_EQ(proj->depth, 10.0);
  EXPECT_FALSE(project_point(rig, Pose(), Vec3(0, 0, -1)));
  EXPECT_FALSE(project_point(rig, Pose(), Vec3(1, 1, 0)));
}

TEST(Project, RoundTripsBackprojection) {
  const auto rig = test_rig();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(0.0, rig.width - 1.0), uy(0.0, rig.height - 1.0), ud(1.0, 5000.0);
  for (int i = 0; i < 1000; ++i) {
    const Pose pose = random_pose(rng);
    const Vec2 px(ux(rng), uy(rng));
    const double d = ud(rng);
    const auto proj = project_point(rig, pose, backproject_point(rig, pose, px, d));
    ASSERT_TRUE(proj);
    EXPECT_NEAR((proj->pixel - px).norm(), 0.0, 1e-6);
    EXPECT_NEAR(proj->depth, d, 1e-6);
  }
}

TEST(PoseAlgebra, InverseAndAssociativity) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    EXPECT_LT(a.compose(a.inverse()).max_abs_diff(Pose()), 1e-9);
    EXPECT_LT(a.inverse().inverse().max_abs_diff(a), 1e-9);
    EXPECT_LT(((a * b) * c).max_abs_diff(a * (b * c)), 1e-9);
    const Mat3& r = a.rotation();
    EXPECT_LT((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-9);
  }
}

TEST(PoseAlgebra, RejectsImproperRotation) {
  Mat3 reflect = Mat3::Identity();
  reflect(0, 0) = -1.0;
  EXPECT_THROW(Pose(reflect, Vec3::Zero()), InvalidArgument);
  EXPECT_THROW(Pose(2.0 * Mat3::Identity(), Vec3::Zero()), InvalidArgument);
  EXPECT_THROW(Pose::from_quaternion(0, 0, 0, 0, Vec3::Zero()), InvalidArgument);
}

TEST(StereoRigTest, ValidatesInvariants) {
  EXPECT_NO_THROW(test_rig().validate());
  auto rig = test_rig();
  rig.baseline = 0.0;
  EXPECT_THROW(rig.validate(), InvalidArgument);
  rig = test_rig();
  rig.fx = 0.0;
  EXPECT_THROW(rig.validate(), InvalidArgument);
  rig = test_rig();
  rig.height = 0;
  EXPECT_THROW(rig.validate(), InvalidArgument);
  EXPECT_TRUE((test_rig().intrinsics() * test_rig().inverse_intrinsics()).isIdentity(1e-12));
}

}  // namespace
}  // namespace densemap
