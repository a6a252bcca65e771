#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "densemap/disparity.hpp"
#include "densemap/geometry.hpp"
#include "densemap/matcher.hpp"
#include "densemap/surface.hpp"
#include "densemap/trajectory.hpp"

namespace densemap {

/// Band-limited value noise: `octaves` layers, the coarsest with lattice
/// spacing finest_wavelength * 2^(octaves-1), each finer layer at half the
/// spacing and half the amplitude.
struct TextureSpec {
  int octaves = 5;
  double finest_wavelength = 0.0;  ///< Surface units; 0 selects ~3 px at the reference depth.
  double contrast = 0.4;
  std::uint64_t seed = 1;
};

class SolidTexture {
 public:
  explicit SolidTexture(const TextureSpec& spec);
  /// Intensity in [0,1] at a 3-D point.
  double operator()(const Vec3& p) const;

 private:
  double lattice(int octave, long i, long j, long k) const;

  TextureSpec spec_;
  std::vector<double> values_;
  std::vector<std::uint16_t> perm_;
  std::vector<Vec3> shifts_;
  double norm_ = 1.0;
};

enum class SceneGeometry { kFrontoParallelPlane, kSlantedPlane, kSphere, kCylinderTube };
enum class PathKind { kStatic, kLinearDolly, kArc };

struct PathSpec {
  PathKind kind = PathKind::kStatic;
  int frames = 1;
  Vec3 step_mm = Vec3::Zero();  ///< Per-frame translation for a dolly.
  double arc_step_deg = 0.0;    ///< Per-frame yaw about the pivot for an arc.
  double arc_pivot_depth_mm = 0.0;
};

/// Scene in the world frame, which coincides with the frame-0 camera of a
/// static or dolly path.
struct SceneSpec {
  SceneGeometry geometry = SceneGeometry::kFrontoParallelPlane;
  double depth_mm = 180.0;  ///< Surface depth along the frame-0 principal ray.
  double tilt_deg = 0.0;    ///< Slanted plane rotation about the camera y axis.
  double radius_mm = 50.0;  ///< Sphere or tube radius.
  TextureSpec texture;
  StereoRig rig = StereoRig::make(450.0, 5.0, 640, 480);
  PathSpec path;
  double frame_rate_hz = 30.0;

  Surface surface() const;
  Pose pose(int frame_index) const;
  double finest_wavelength_mm() const;
  void validate() const;
};

/// Slanted plane whose disparity ramps linearly from `left_disparity` at
/// column 0 to `right_disparity` at the last column.
SceneSpec slanted_ramp_scene(const StereoRig& rig, double left_disparity, double right_disparity);

/// Fronto-parallel plane at constant disparity.
SceneSpec plane_scene(const StereoRig& rig, double disparity);

SceneGeometry parse_geometry(const std::string& name);
std::string geometry_name(SceneGeometry g);
PathKind parse_path(const std::string& name);

struct RenderedFrame {
  RectifiedStereoPair pair;
  DisparityField disparity;
  DepthField depth;
  Pose pose;
  double timestamp = 0.0;
};

/// Ray-casts both views against the analytic surface. Throws
/// InvalidArgument if any pixel of either view misses the surface.
RenderedFrame render_pair(const SceneSpec& spec, int frame_index);

/// Writes left_NNNNNN.pgm / right_NNNNNN.pgm (16-bit), gt_disp_NNNNNN.pfm,
/// gt_depth_NNNNNN.pfm, trajectory.txt, reference.txt and session.cfg.
void write_sequence(const SceneSpec& spec, const std::filesystem::path& out_dir,
                    const MatcherConfig& matcher = {});

/// Texture sampled on the pixel grid, right image shifted so that
/// right(x - shift) == left(x). Texture units are pixels.
RectifiedStereoPair make_shifted_pair(const TextureSpec& texture, int width, int height, double shift);

}  // namespace densemap
