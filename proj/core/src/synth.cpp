#include "densemap/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "densemap/config.hpp"
#include "densemap/image_io.hpp"

namespace densemap {
namespace {

constexpr int kPeriod = 1024;
constexpr int kMask = kPeriod - 1;

inline double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

// Raw engine output is portable; std distributions are not.
double unit_interval(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Mat3 rot_y(double radians) {
  return Eigen::AngleAxisd(radians, Vec3::UnitY()).toRotationMatrix();
}

std::string frame_name(const char* prefix, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%06d.%s", prefix, index, ext);
  return buf;
}

}  // namespace

SolidTexture::SolidTexture(const TextureSpec& spec) : spec_(spec) {
  if (spec.octaves < 1) throw InvalidArgument("TextureSpec: octaves must be >= 1");
  if (!(spec.finest_wavelength > 0.0)) throw InvalidArgument("TextureSpec: finest_wavelength must be positive");
  std::mt19937_64 rng(spec.seed);
  values_.resize(kPeriod);
  for (auto& v : values_) v = 2.0 * unit_interval(rng) - 1.0;
  perm_.resize(kPeriod);
  for (int i = 0; i < kPeriod; ++i) perm_[static_cast<std::size_t>(i)] = static_cast<std::uint16_t>(i);
  for (int i = kPeriod - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm_[static_cast<std::size_t>(i)], perm_[j]);
  }
  double energy = 0.0;
  for (int o = 0; o < spec.octaves; ++o) {
    shifts_.emplace_back(kPeriod * unit_interval(rng), kPeriod * unit_interval(rng), kPeriod * unit_interval(rng));
    const double amp = std::ldexp(1.0, -o);
    energy += amp * amp;
  }
  norm_ = std::sqrt(energy);
}

double SolidTexture::lattice(int octave, long i, long j, long k) const {
  const auto p = [this](long v) { return static_cast<long>(perm_[static_cast<std::size_t>(v & kMask)]); };
  return values_[static_cast<std::size_t>(p(p(p(i + 131L * octave) + j) + k))];
}

double SolidTexture::operator()(const Vec3& point) const {
  double sum = 0.0;
  const double coarsest = std::ldexp(spec_.finest_wavelength, spec_.octaves - 1);
  for (int o = 0; o < spec_.octaves; ++o) {
    const double spacing = std::ldexp(coarsest, -o);
    const Vec3 q = point / spacing + shifts_[static_cast<std::size_t>(o)];
    const double fx = std::floor(q.x()), fy = std::floor(q.y()), fz = std::floor(q.z());
    const long i = static_cast<long>(fx), j = static_cast<long>(fy), k = static_cast<long>(fz);
    const double u = fade(q.x() - fx), v = fade(q.y() - fy), w = fade(q.z() - fz);
    const auto lerp = [](double a, double b, double t) { return a + t * (b - a); };
    const double c00 = lerp(lattice(o, i, j, k), lattice(o, i + 1, j, k), u);
    const double c10 = lerp(lattice(o, i, j + 1, k), lattice(o, i + 1, j + 1, k), u);
    const double c01 = lerp(lattice(o, i, j, k + 1), lattice(o, i + 1, j, k + 1), u);
    const double c11 = lerp(lattice(o, i, j + 1, k + 1), lattice(o, i + 1, j + 1, k + 1), u);
    sum += std::ldexp(1.0, -o) * lerp(lerp(c00, c10, v), lerp(c01, c11, v), w);
  }
  return std::clamp(0.5 + spec_.contrast * sum / norm_, 0.0, 1.0);
}

Surface SceneSpec::surface() const {
  switch (geometry) {
    case SceneGeometry::kFrontoParallelPlane:
      return PlaneSurface{Vec3::UnitZ(), depth_mm};
    case SceneGeometry::kSlantedPlane: {
      const double t = tilt_deg * std::numbers::pi / 180.0;
      return PlaneSurface{Vec3(std::sin(t), 0.0, std::cos(t)), depth_mm * std::cos(t)};
    }
    case SceneGeometry::kSphere:
      return SphereSurface{Vec3(0.0, 0.0, depth_mm + radius_mm), radius_mm};
    case SceneGeometry::kCylinderTube:
      // Camera inside the tube looking across it at the far wall.
      return CylinderSurface{Vec3(0.0, 0.0, depth_mm - radius_mm), Vec3::UnitY(), radius_mm};
  }
  throw InvalidArgument("SceneSpec: unknown geometry");
}

Pose SceneSpec::pose(int frame_index) const {
  switch (path.kind) {
    case PathKind::kStatic:
      return Pose();
    case PathKind::kLinearDolly:
      return Pose::from_translation(frame_index * path.step_mm);
    case PathKind::kArc: {
      const Mat3 r = rot_y(frame_index * path.arc_step_deg * std::numbers::pi / 180.0);
      const Vec3 pivot(0.0, 0.0, path.arc_pivot_depth_mm);
      return Pose(r, pivot - r * pivot);
    }
  }
  throw InvalidArgument("SceneSpec: unknown path");
}

double SceneSpec::finest_wavelength_mm() const {
  if (texture.finest_wavelength > 0.0) return texture.finest_wavelength;
  return 3.0 * depth_mm / rig.fx;
}

void SceneSpec::validate() const {
  rig.validate();
  if (!(depth_mm > 0.0)) throw InvalidArgument("SceneSpec: depth must be positive");
  if (geometry == SceneGeometry::kSphere || geometry == SceneGeometry::kCylinderTube) {
    if (!(radius_mm > 0.0)) throw InvalidArgument("SceneSpec: radius must be positive");
  }
  if (geometry == SceneGeometry::kCylinderTube && !(depth_mm < 2.0 * radius_mm))
    throw InvalidArgument("SceneSpec: tube camera must sit inside the tube (depth < 2 * radius)");
  if (geometry == SceneGeometry::kSlantedPlane && !(std::abs(tilt_deg) < 90.0))
    throw InvalidArgument("SceneSpec: tilt must lie in (-90, 90) degrees");
  if (path.frames < 1) throw InvalidArgument("SceneSpec: frame count must be >= 1");
}

SceneSpec plane_scene(const StereoRig& rig, double disparity) {
  SceneSpec spec;
  spec.rig = rig;
  spec.geometry = SceneGeometry::kFrontoParallelPlane;
  spec.depth_mm = rig.fx * rig.baseline / disparity;
  return spec;
}

SceneSpec slanted_ramp_scene(const StereoRig& rig, double left_disparity, double right_disparity) {
  // Inverse depth of a plane is affine in normalized image x: 1/z = a + b*xn.
  const double fb = rig.fx * rig.baseline;
  const double xl = -rig.cx / rig.fx;
  const double xr = (rig.width - 1 - rig.cx) / rig.fx;
  const double il = left_disparity / fb, ir = right_disparity / fb;
  const double b = (ir - il) / (xr - xl);
  const double a = il - b * xl;
  SceneSpec spec;
  spec.rig = rig;
  spec.geometry = SceneGeometry::kSlantedPlane;
  spec.depth_mm = 1.0 / a;
  spec.tilt_deg = std::atan2(b, a) * 180.0 / std::numbers::pi;
  return spec;
}

SceneGeometry parse_geometry(const std::string& name) {
  if (name == "plane") return SceneGeometry::kFrontoParallelPlane;
  if (name == "slanted") return SceneGeometry::kSlantedPlane;
  if (name == "sphere") return SceneGeometry::kSphere;
  if (name == "tube" || name == "cylinder") return SceneGeometry::kCylinderTube;
  throw InvalidArgument("unknown scene '" + name + "' (plane, slanted, sphere, tube)");
}

std::string geometry_name(SceneGeometry g) {
  switch (g) {
    case SceneGeometry::kFrontoParallelPlane: return "plane";
    case SceneGeometry::kSlantedPlane: return "slanted";
    case SceneGeometry::kSphere: return "sphere";
    case SceneGeometry::kCylinderTube: return "tube";
  }
  return "?";
}

PathKind parse_path(const std::string& name) {
  if (name == "static") return PathKind::kStatic;
  if (name == "dolly") return PathKind::kLinearDolly;
  if (name == "arc") return PathKind::kArc;
  throw InvalidArgument("unknown path '" + name + "' (static, dolly, arc)");
}

RenderedFrame render_pair(const SceneSpec& spec, int frame_index) {
  spec.validate();
  if (frame_index < 0 || frame_index >= spec.path.frames)
    throw InvalidArgument("render_pair: frame " + std::to_string(frame_index) + " outside sequence");
  const auto& rig = spec.rig;
  const Surface surface = spec.surface();
  TextureSpec tex = spec.texture;
  tex.finest_wavelength = spec.finest_wavelength_mm();
  const SolidTexture texture(tex);

  RenderedFrame frame;
  frame.pose = spec.pose(frame_index);
  frame.timestamp = frame_index / spec.frame_rate_hz;
  frame.pair.left = GrayImage(rig.width, rig.height);
  frame.pair.right = GrayImage(rig.width, rig.height);
  frame.disparity = DisparityField(rig.width, rig.height);
  frame.depth = DepthField(rig.width, rig.height);

  const Mat3& r = frame.pose.rotation();
  const Vec3 left_origin = frame.pose.translation();
  const Vec3 right_origin = frame.pose.apply(Vec3(rig.baseline, 0.0, 0.0));
  const double fb = rig.fx * rig.baseline;
  for (int y = 0; y < rig.height; ++y)
    for (int x = 0; x < rig.width; ++x) {
      // Camera-frame ray with unit z, so the hit parameter equals depth.
      const Vec3 dir = r * Vec3((x - rig.cx) / rig.fx, (y - rig.cy) / rig.fy, 1.0);
      const auto tl = intersect_ray(surface, left_origin, dir);
      const auto tr = intersect_ray(surface, right_origin, dir);
      if (!tl || !tr)
        throw InvalidArgument("render_pair: surface not visible at pixel (" + std::to_string(x) + ", " +
                              std::to_string(y) + ") of frame " + std::to_string(frame_index));
      frame.pair.left(x, y) = static_cast<float>(texture(left_origin + *tl * dir));
      frame.pair.right(x, y) = static_cast<float>(texture(right_origin + *tr * dir));
      frame.depth.set(x, y, *tl);
      frame.disparity.disparity(x, y) = fb / *tl;
      frame.disparity.confidence(x, y) = 1.0;
      frame.disparity.valid_mask(x, y) = 1;
    }
  frame.pair.left_color = to_color(frame.pair.left);
  return frame;
}

void write_sequence(const SceneSpec& spec, const std::filesystem::path& out_dir, const MatcherConfig& matcher) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  Trajectory trajectory;
  for (int i = 0; i < spec.path.frames; ++i) {
    const auto frame = render_pair(spec, i);
    write_pgm(out_dir / frame_name("left", i, "pgm"), frame.pair.left, 65535);
    write_pgm(out_dir / frame_name("right", i, "pgm"), frame.pair.right, 65535);
    write_pfm(out_dir / frame_name("gt_disp", i, "pfm"), frame.disparity.disparity);
    write_depth(out_dir / frame_name("gt_depth", i, "pfm"), frame.depth);
    trajectory.push_back({frame.timestamp, frame.pose});
  }
  write_tum(out_dir / "trajectory.txt", trajectory);

  std::ofstream ref(out_dir / "reference.txt");
  ref << format_surface(spec.surface()) << '\n';
  if (!ref) throw IoError("cannot write reference.txt in " + out_dir.string());

  std::ofstream cfg(out_dir / "session.cfg");
  cfg << "# scene: " << geometry_name(spec.geometry) << ", " << spec.path.frames << " frames, seed "
      << spec.texture.seed << "\n# rig\n"
      << format_rig_config(spec.rig) << "# matcher\n"
      << format_matcher_config(matcher);
  if (!cfg) throw IoError("cannot write session.cfg in " + out_dir.string());
}

RectifiedStereoPair make_shifted_pair(const TextureSpec& texture, int width, int height, double shift) {
  const SolidTexture tex(texture);
  RectifiedStereoPair pair;
  pair.left = GrayImage(width, height);
  pair.right = GrayImage(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      pair.left(x, y) = static_cast<float>(tex(Vec3(x, y, 0.0)));
      pair.right(x, y) = static_cast<float>(tex(Vec3(x + shift, y, 0.0)));
    }
  return pair;
}

}  // namespace densemap
