#include "densemap/trajectory.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace densemap {

Trajectory parse_tum(std::istream& in) {
  Trajectory out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    double v[8];
    int n = 0;
    while (n < 8 && fields >> v[n]) ++n;
    if (n == 0 && fields.eof()) continue;
    std::string rest;
    if (n != 8 || (fields >> rest))
      throw DataError("trajectory line " + std::to_string(line_no) + ": expected 8 numeric fields");
    try {
      out.push_back({v[0], Pose::from_quaternion(v[4], v[5], v[6], v[7], Vec3(v[1], v[2], v[3]))});
    } catch (const InvalidArgument& e) {
      throw DataError("trajectory line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

Trajectory read_tum(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory " + path.string());
  return parse_tum(in);
}

void write_tum(std::ostream& out, const Trajectory& trajectory) {
  out << "# timestamp tx ty tz qx qy qz qw\n";
  out << std::setprecision(17);
  for (const auto& [stamp, pose] : trajectory) {
    const auto q = pose.quaternion();
    const auto& t = pose.translation();
    out << stamp << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' ' << q.x() << ' ' << q.y() << ' '
        << q.z() << ' ' << q.w() << '\n';
  }
}

void write_tum(const std::filesystem::path& path, const Trajectory& trajectory) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trajectory " + path.string());
  write_tum(out, trajectory);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace densemap
