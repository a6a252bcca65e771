#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "densemap/synth.hpp"

namespace densemap::testing {

/// Texture in pixel units, fine enough to lock the matcher but smooth at
/// the pixel scale.
inline TextureSpec pixel_texture(std::uint64_t seed, int octaves = 4, double finest_px = 3.0) {
  TextureSpec t;
  t.seed = seed;
  t.octaves = octaves;
  t.finest_wavelength = finest_px;
  t.contrast = 0.4;
  return t;
}

inline StereoRig desk_rig(int width = 640, int height = 480) { return StereoRig::make(450.0, 5.0, width, height); }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("densemap_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace densemap::testing
