#pragma once

#include <cstdint>
#include <filesystem>

#include "densemap/disparity.hpp"
#include "densemap/geometry.hpp"
#include "densemap/image.hpp"

namespace densemap {

// Netpbm (P5 8/16-bit gray, P6 8-bit color) and little-endian PFM.

struct ImageInfo {
  int width = 0;
  int height = 0;
  int channels = 0;
};

/// Parses only the header of a P5/P6 file.
ImageInfo probe_image(const std::filesystem::path& path);

/// Reads P5 or P6; color inputs are converted to luma. Values in [0,1].
GrayImage read_gray(const std::filesystem::path& path);

/// Reads P6 directly, or P5 replicated into three channels.
ColorImage read_color(const std::filesystem::path& path);

/// Writes a P5 image with the given maxval (255 or 65535); input clamped to [0,1].
void write_pgm(const std::filesystem::path& path, const GrayImage& image, int maxval = 255);
void write_pgm_mask(const std::filesystem::path& path, const Image<std::uint8_t>& mask);
Image<std::uint8_t> read_pgm_mask(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const ColorImage& image);

/// Single-channel PFM, little-endian (scale -1.0), rows stored bottom-up.
void write_pfm(const std::filesystem::path& path, const Image<double>& image);
Image<double> read_pfm(const std::filesystem::path& path);

/// Disparity goes to `<stem>.pfm`, confidence to `<stem>_conf.pfm` and the
/// validity mask to `<stem>_mask.pgm` (255 = valid).
void write_disparity(const std::filesystem::path& pfm_path, const DisparityField& field);
DisparityField read_disparity(const std::filesystem::path& pfm_path);

/// Depth PFM holding 0 at invalid pixels.
void write_depth(const std::filesystem::path& pfm_path, const DepthField& field);
DepthField read_depth(const std::filesystem::path& pfm_path);

}  // namespace densemap
