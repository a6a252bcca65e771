#include "densemap/ply.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace densemap {
namespace {

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

enum class Format { kBinaryLittle, kAscii };

struct Property {
  std::string name;
  std::string type;
};

std::size_t type_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "float" || type == "int32" || type == "uint32" ||
      type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  throw DataError("PLY: unsupported property type " + type);
}

double decode(const unsigned char* p, const std::string& type) {
  const auto load = [p]<typename T>(T) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return static_cast<double>(byteswap_if_big(v));
  };
  if (type == "char" || type == "int8") return load(std::int8_t{});
  if (type == "uchar" || type == "uint8") return load(std::uint8_t{});
  if (type == "short" || type == "int16") return load(std::int16_t{});
  if (type == "ushort" || type == "uint16") return load(std::uint16_t{});
  if (type == "int" || type == "int32") return load(std::int32_t{});
  if (type == "uint" || type == "uint32") return load(std::uint32_t{});
  if (type == "float" || type == "float32") return load(float{});
  return load(double{});
}

}  // namespace

void write_ply(const std::filesystem::path& path, std::span<const MapPoint> points) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  constexpr std::size_t kStride = 15;
  std::vector<unsigned char> buf(kStride * std::min<std::size_t>(points.size(), 65536));
  std::size_t filled = 0;
  for (const auto& p : points) {
    unsigned char* dst = buf.data() + filled * kStride;
    for (int k = 0; k < 3; ++k) {
      const float v = byteswap_if_big(static_cast<float>(p.position[k]));
      std::memcpy(dst + 4 * k, &v, 4);
    }
    std::memcpy(dst + 12, p.color.data(), 3);
    if (++filled * kStride == buf.size()) {
      out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
      filled = 0;
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(filled * kStride));
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<MapPoint> read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) throw DataError("not a PLY file: " + path.string());

  Format format = Format::kAscii;
  std::size_t vertex_count = 0;
  std::vector<Property> props;
  bool in_vertex = false;
  int element_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "end_header") break;
    if (kw == "format") {
      std::string f;
      ls >> f;
      if (f == "binary_little_endian") format = Format::kBinaryLittle;
      else if (f == "ascii") format = Format::kAscii;
      else throw DataError("PLY: unsupported format " + f);
    } else if (kw == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      in_vertex = name == "vertex";
      if (in_vertex != (element_no++ == 0)) throw DataError("PLY: vertex must be the first element");
      if (in_vertex) vertex_count = count;
    } else if (kw == "property" && in_vertex) {
      Property p;
      ls >> p.type;
      if (p.type == "list") throw DataError("PLY: list properties on vertices are not supported");
      ls >> p.name;
      props.push_back(p);
    }
  }
  if (!in) throw DataError("PLY: truncated header in " + path.string());

  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
  std::vector<std::size_t> offsets;
  std::size_t stride = 0;
  for (std::size_t k = 0; k < props.size(); ++k) {
    const auto& n = props[k].name;
    const int ki = static_cast<int>(k);
    if (n == "x") ix = ki;
    else if (n == "y") iy = ki;
    else if (n == "z") iz = ki;
    else if (n == "red" || n == "r") ir = ki;
    else if (n == "green" || n == "g") ig = ki;
    else if (n == "blue" || n == "b") ib = ki;
    offsets.push_back(stride);
    stride += type_size(props[k].type);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw DataError("PLY: vertex lacks x/y/z");

  std::vector<MapPoint> points(vertex_count);
  std::vector<double> values(props.size());
  std::vector<unsigned char> raw(stride);
  for (auto& p : points) {
    if (format == Format::kBinaryLittle) {
      in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(stride));
      if (!in) throw DataError("PLY: truncated vertex data in " + path.string());
      for (std::size_t k = 0; k < props.size(); ++k) values[k] = decode(raw.data() + offsets[k], props[k].type);
    } else {
      for (auto& v : values)
        if (!(in >> v)) throw DataError("PLY: truncated vertex data in " + path.string());
    }
    p.position = Vec3(values[static_cast<std::size_t>(ix)], values[static_cast<std::size_t>(iy)],
                      values[static_cast<std::size_t>(iz)]);
    if (ir >= 0 && ig >= 0 && ib >= 0)
      p.color = {static_cast<std::uint8_t>(values[static_cast<std::size_t>(ir)]),
                 static_cast<std::uint8_t>(values[static_cast<std::size_t>(ig)]),
                 static_cast<std::uint8_t>(values[static_cast<std::size_t>(ib)])};
  }
  return points;
}

}  // namespace densemap
