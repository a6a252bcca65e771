#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "densemap/geometry.hpp"

namespace densemap {

struct StampedPose {
  double timestamp = 0.0;
  Pose pose;
};

using Trajectory = std::vector<StampedPose>;

/// Parses TUM lines `timestamp tx ty tz qx qy qz qw` (camera-to-world).
/// Blank lines and `#` comments are skipped. Throws DataError with the
/// offending line number on malformed input.
Trajectory parse_tum(std::istream& in);
Trajectory read_tum(const std::filesystem::path& path);

void write_tum(std::ostream& out, const Trajectory& trajectory);
void write_tum(const std::filesystem::path& path, const Trajectory& trajectory);

}  // namespace densemap
