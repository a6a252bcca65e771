#include <gtest/gtest.h>

#include <sstream>

#include "densemap/trajectory.hpp"

namespace densemap {
namespace {

TEST(Tum, ParsesCommentsAndBlankLines) {
  std::istringstream in(
      "# timestamp tx ty tz qx qy qz qw\n"
      "\n"
      "0.0 1 2 3 0 0 0 1\n"
      "  0.5 4 5 6 0 0 0.7071067811865476 0.7071067811865476  # yaw 90\n");
  const auto traj = parse_tum(in);
  ASSERT_EQ(traj.size(), 2u);
  EXPECT_DOUBLE_EQ(traj[0].timestamp, 0.0);
  EXPECT_TRUE(traj[0].pose.translation().isApprox(Vec3(1, 2, 3)));
  EXPECT_TRUE(traj[0].pose.rotation().isIdentity(1e-12));
  const Vec3 x = traj[1].pose.rotation() * Vec3::UnitX();
  EXPECT_NEAR((x - Vec3::UnitY()).norm(), 0.0, 1e-12);
}

TEST(Tum, NormalizesQuaternion) {
  std::istringstream in("1 0 0 0 0 0 0 2\n");
  const auto traj = parse_tum(in);
  EXPECT_TRUE(traj[0].pose.rotation().isIdentity(1e-12));
}

TEST(Tum, RejectsMalformedLines) {
  std::istringstream short_line("0 1 2 3 0 0 0\n");
  EXPECT_THROW(parse_tum(short_line), DataError);
  std::istringstream long_line("0 1 2 3 0 0 0 1 9\n");
  EXPECT_THROW(parse_tum(long_line), DataError);
  std::istringstream junk("0 1 2 x 0 0 0 1\n");
  EXPECT_THROW(parse_tum(junk), DataError);
  std::istringstream zero_quat("0 1 2 3 0 0 0 0\n");
  EXPECT_THROW(parse_tum(zero_quat), DataError);
}

TEST(Tum, WriteThenParseKeepsPoses) {
  Trajectory traj;
  for (int i = 0; i < 5; ++i) {
    const Eigen::Quaterniond q(Eigen::AngleAxisd(0.3 * i, Vec3(1, 2, 3).normalized()));
    traj.push_back({i / 30.0, Pose::from_quaternion(q.x(), q.y(), q.z(), q.w(), Vec3(i, -2.0 * i, 0.5))});
  }
  std::stringstream buf;
  write_tum(buf, traj);
  const auto back = parse_tum(buf);
  ASSERT_EQ(back.size(), traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    EXPECT_DOUBLE_EQ(back[i].timestamp, traj[i].timestamp);
    EXPECT_LT(back[i].pose.max_abs_diff(traj[i].pose), 1e-12);
  }
}

}  // namespace
}  // namespace densemap
