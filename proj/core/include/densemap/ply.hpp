#pragma once

#include <filesystem>
#include <vector>

#include "densemap/mosaic.hpp"

namespace densemap {

/// Binary little-endian PLY: float x y z, uchar red green blue.
void write_ply(const std::filesystem::path& path, std::span<const MapPoint> points);

/// Reads vertex position and color from binary little-endian or ASCII PLY.
/// Source keyframe is not stored and comes back as -1.
std::vector<MapPoint> read_ply(const std::filesystem::path& path);

}  // namespace densemap
