#include "densemap/surface.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <vector>

namespace densemap {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

// Smallest positive root of a t^2 + 2 b t + c = 0.
std::optional<double> smallest_positive_root(double a, double b, double c) {
  if (!(std::abs(a) > 0.0)) return std::nullopt;
  const double disc = b * b - a * c;
  if (disc < 0.0) return std::nullopt;
  const double s = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double q = b >= 0.0 ? -(b + s) : -(b - s);
  double t0 = q / a;
  double t1 = q != 0.0 ? c / q : t0;
  if (t0 > t1) std::swap(t0, t1);
  if (t0 > 0.0) return t0;
  if (t1 > 0.0) return t1;
  return std::nullopt;
}

std::vector<double> parse_numbers(const std::string& body, const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("bad surface spec '" + text + "'");
    }
  }
  return values;
}

}  // namespace

double surface_distance(const Surface& surface, const Vec3& p) {
  return std::visit(Overloaded{
                        [&](const PlaneSurface& s) { return std::abs(s.normal.dot(p) - s.offset); },
                        [&](const SphereSurface& s) { return std::abs((p - s.center).norm() - s.radius); },
                        [&](const CylinderSurface& s) {
                          const Vec3 rel = p - s.point;
                          const Vec3 radial = rel - rel.dot(s.axis) * s.axis;
                          return std::abs(radial.norm() - s.radius);
                        },
                    },
                    surface);
}

std::optional<double> intersect_ray(const Surface& surface, const Vec3& origin, const Vec3& direction) {
  return std::visit(Overloaded{
                        [&](const PlaneSurface& s) -> std::optional<double> {
                          const double denom = s.normal.dot(direction);
                          if (std::abs(denom) < 1e-15) return std::nullopt;
                          const double t = (s.offset - s.normal.dot(origin)) / denom;
                          if (!(t > 0.0)) return std::nullopt;
                          return t;
                        },
                        [&](const SphereSurface& s) {
                          const Vec3 oc = origin - s.center;
                          return smallest_positive_root(direction.squaredNorm(), oc.dot(direction),
                                                        oc.squaredNorm() - s.radius * s.radius);
                        },
                        [&](const CylinderSurface& s) {
                          const Vec3 oc = origin - s.point;
                          const Vec3 d_perp = direction - direction.dot(s.axis) * s.axis;
                          const Vec3 o_perp = oc - oc.dot(s.axis) * s.axis;
                          return smallest_positive_root(d_perp.squaredNorm(), o_perp.dot(d_perp),
                                                        o_perp.squaredNorm() - s.radius * s.radius);
                        },
                    },
                    surface);
}

Surface parse_surface(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw InvalidArgument("bad surface spec '" + text + "'");
  const std::string kind = text.substr(0, colon);
  const auto v = parse_numbers(text.substr(colon + 1), text);
  const auto unit = [&](double x, double y, double z) {
    const Vec3 d(x, y, z);
    if (!(d.norm() > 0.0)) throw InvalidArgument("bad surface spec '" + text + "': zero direction");
    return Vec3(d.normalized());
  };
  if (kind == "plane" && v.size() == 4) {
    const double n = Vec3(v[0], v[1], v[2]).norm();
    return PlaneSurface{unit(v[0], v[1], v[2]), v[3] / n};
  }
  if (kind == "sphere" && v.size() == 4 && v[3] > 0.0) return SphereSurface{Vec3(v[0], v[1], v[2]), v[3]};
  if (kind == "cylinder" && v.size() == 7 && v[6] > 0.0)
    return CylinderSurface{Vec3(v[0], v[1], v[2]), unit(v[3], v[4], v[5]), v[6]};
  throw InvalidArgument("bad surface spec '" + text + "'");
}

std::string format_surface(const Surface& surface) {
  std::ostringstream out;
  out << std::setprecision(17);
  std::visit(Overloaded{
                 [&](const PlaneSurface& s) {
                   out << "plane:" << s.normal.x() << ',' << s.normal.y() << ',' << s.normal.z() << ',' << s.offset;
                 },
                 [&](const SphereSurface& s) {
                   out << "sphere:" << s.center.x() << ',' << s.center.y() << ',' << s.center.z() << ',' << s.radius;
                 },
                 [&](const CylinderSurface& s) {
                   out << "cylinder:" << s.point.x() << ',' << s.point.y() << ',' << s.point.z() << ',' << s.axis.x()
                       << ',' << s.axis.y() << ',' << s.axis.z() << ',' << s.radius;
                 },
             },
             surface);
  return out.str();
}

}  // namespace densemap
