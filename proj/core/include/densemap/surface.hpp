#pragma once

#include <optional>
#include <string>
#include <variant>

#include "densemap/geometry.hpp"

namespace densemap {

/// Points X with normal . X = offset; normal has unit length.
struct PlaneSurface {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
};

struct SphereSurface {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

/// Infinite circular cylinder around the line through `point` along `axis`.
struct CylinderSurface {
  Vec3 point = Vec3::Zero();
  Vec3 axis = Vec3::UnitY();
  double radius = 1.0;
};

using Surface = std::variant<PlaneSurface, SphereSurface, CylinderSurface>;

/// Unsigned distance from `p` to the closest surface point.
double surface_distance(const Surface& surface, const Vec3& p);

/// Smallest t > 0 with origin + t * direction on the surface.
std::optional<double> intersect_ray(const Surface& surface, const Vec3& origin, const Vec3& direction);

/// Text form: `plane:nx,ny,nz,offset`, `sphere:cx,cy,cz,r`,
/// `cylinder:px,py,pz,ax,ay,az,r`. Directions are normalized on parse.
Surface parse_surface(const std::string& text);
std::string format_surface(const Surface& surface);

}  // namespace densemap
