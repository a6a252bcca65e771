#include "densemap/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace densemap {
namespace {

struct NetpbmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
};

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::string next_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

int parse_int(const std::string& tok, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError("malformed netpbm header in " + path.string());
  }
}

NetpbmHeader read_header(std::istream& in, const std::filesystem::path& path) {
  NetpbmHeader h;
  h.magic = next_token(in);
  if (h.magic != "P5" && h.magic != "P6") throw DataError("unsupported image format in " + path.string());
  h.width = parse_int(next_token(in), path);
  h.height = parse_int(next_token(in), path);
  h.maxval = parse_int(next_token(in), path);
  if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 65535)
    throw DataError("invalid netpbm header in " + path.string());
  return h;
}

// Raw samples normalized to [0,1]; channels interleaved.
std::vector<float> read_samples(std::istream& in, const NetpbmHeader& h, int channels,
                                const std::filesystem::path& path) {
  const std::size_t count = static_cast<std::size_t>(h.width) * h.height * channels;
  const int bytes = h.maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(count * bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw DataError("truncated image " + path.string());
  std::vector<float> out(count);
  const float scale = 1.0f / static_cast<float>(h.maxval);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned v = bytes == 2 ? (unsigned{raw[2 * i]} << 8) | raw[2 * i + 1] : raw[i];
    out[i] = std::min(1.0f, static_cast<float>(v) * scale);
  }
  return out;
}

float to_le_float(float v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    bits = __builtin_bswap32(bits);
    std::memcpy(&v, &bits, 4);
  }
  return v;
}

}  // namespace

GrayImage to_gray(const ColorImage& color) {
  GrayImage gray(color.width(), color.height());
  for (int y = 0; y < color.height(); ++y)
    for (int x = 0; x < color.width(); ++x) {
      const auto& c = color(x, y);
      gray(x, y) = (0.299f * c[0] + 0.587f * c[1] + 0.114f * c[2]) / 255.0f;
    }
  return gray;
}

ColorImage to_color(const GrayImage& gray) {
  ColorImage color(gray.width(), gray.height());
  for (int y = 0; y < gray.height(); ++y)
    for (int x = 0; x < gray.width(); ++x) {
      const auto v = static_cast<std::uint8_t>(std::lround(std::clamp(gray(x, y), 0.0f, 1.0f) * 255.0f));
      color(x, y) = {v, v, v};
    }
  return color;
}

ImageInfo probe_image(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto h = read_header(in, path);
  return {h.width, h.height, h.magic == "P6" ? 3 : 1};
}

GrayImage read_gray(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto h = read_header(in, path);
  const int channels = h.magic == "P6" ? 3 : 1;
  const auto samples = read_samples(in, h, channels, path);
  GrayImage img(h.width, h.height);
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (channels == 1) {
      px[i] = samples[i];
    } else {
      px[i] = 0.299f * samples[3 * i] + 0.587f * samples[3 * i + 1] + 0.114f * samples[3 * i + 2];
    }
  }
  return img;
}

ColorImage read_color(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto h = read_header(in, path);
  const int channels = h.magic == "P6" ? 3 : 1;
  const auto samples = read_samples(in, h, channels, path);
  ColorImage img(h.width, h.height);
  auto px = img.pixels();
  const auto q = [](float v) { return static_cast<std::uint8_t>(std::lround(v * 255.0f)); };
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (channels == 1) {
      const auto v = q(samples[i]);
      px[i] = {v, v, v};
    } else {
      px[i] = {q(samples[3 * i]), q(samples[3 * i + 1]), q(samples[3 * i + 2])};
    }
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image, int maxval) {
  if (maxval != 255 && maxval != 65535) throw InvalidArgument("write_pgm: maxval must be 255 or 65535");
  auto out = open_out(path);
  out << "P5\n" << image.width() << ' ' << image.height() << '\n' << maxval << '\n';
  std::vector<unsigned char> raw;
  raw.reserve(image.size() * (maxval > 255 ? 2 : 1));
  for (float v : image.pixels()) {
    const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0f, 1.0f) * static_cast<float>(maxval)));
    if (maxval > 255) raw.push_back(static_cast<unsigned char>(q >> 8));
    raw.push_back(static_cast<unsigned char>(q & 0xff));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_pgm_mask(const std::filesystem::path& path, const Image<std::uint8_t>& mask) {
  auto out = open_out(path);
  out << "P5\n" << mask.width() << ' ' << mask.height() << "\n255\n";
  for (auto v : mask.pixels()) out.put(static_cast<char>(v ? 255 : 0));
  if (!out) throw IoError("write failed: " + path.string());
}

Image<std::uint8_t> read_pgm_mask(const std::filesystem::path& path) {
  const auto gray = read_gray(path);
  Image<std::uint8_t> mask(gray.width(), gray.height());
  for (int y = 0; y < gray.height(); ++y)
    for (int x = 0; x < gray.width(); ++x) mask(x, y) = gray(x, y) >= 0.5f ? 1 : 0;
  return mask;
}

void write_ppm(const std::filesystem::path& path, const ColorImage& image) {
  auto out = open_out(path);
  out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
  for (const auto& c : image.pixels()) out.write(reinterpret_cast<const char*>(c.data()), 3);
  if (!out) throw IoError("write failed: " + path.string());
}

void write_pfm(const std::filesystem::path& path, const Image<double>& image) {
  auto out = open_out(path);
  out << "Pf\n" << image.width() << ' ' << image.height() << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(image.width()));
  for (int y = image.height() - 1; y >= 0; --y) {
    const auto src = image.row(y);
    std::transform(src.begin(), src.end(), row.begin(),
                   [](double v) { return to_le_float(static_cast<float>(v)); });
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Image<double> read_pfm(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string magic, scale_tok;
  int width = 0, height = 0;
  in >> magic >> width >> height >> scale_tok;
  if (magic != "Pf" || width <= 0 || height <= 0) throw DataError("not a single-channel PFM: " + path.string());
  in.get();
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    throw DataError("bad PFM scale in " + path.string());
  }
  const bool little = scale < 0.0;
  Image<double> img(width, height);
  std::vector<float> row(static_cast<std::size_t>(width));
  for (int y = height - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
    if (!in) throw DataError("truncated PFM " + path.string());
    for (int x = 0; x < width; ++x) {
      float v = row[static_cast<std::size_t>(x)];
      if (little != (std::endian::native == std::endian::little)) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        bits = __builtin_bswap32(bits);
        std::memcpy(&v, &bits, 4);
      }
      img(x, y) = v;
    }
  }
  return img;
}

namespace {
std::filesystem::path sibling(const std::filesystem::path& pfm_path, const std::string& suffix,
                              const std::string& ext) {
  auto p = pfm_path;
  p.replace_filename(pfm_path.stem().string() + suffix + ext);
  return p;
}
}  // namespace

void write_disparity(const std::filesystem::path& pfm_path, const DisparityField& field) {
  write_pfm(pfm_path, field.disparity);
  write_pfm(sibling(pfm_path, "_conf", ".pfm"), field.confidence);
  write_pgm_mask(sibling(pfm_path, "_mask", ".pgm"), field.valid_mask);
}

DisparityField read_disparity(const std::filesystem::path& pfm_path) {
  DisparityField field;
  field.disparity = read_pfm(pfm_path);
  const int w = field.disparity.width(), h = field.disparity.height();
  const auto conf_path = sibling(pfm_path, "_conf", ".pfm");
  field.confidence = std::filesystem::exists(conf_path) ? read_pfm(conf_path) : Image<double>(w, h, 1.0);
  const auto mask_path = sibling(pfm_path, "_mask", ".pgm");
  if (std::filesystem::exists(mask_path)) {
    field.valid_mask = read_pgm_mask(mask_path);
  } else {
    field.valid_mask = Image<std::uint8_t>(w, h, 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) field.valid_mask(x, y) = std::isfinite(field.disparity(x, y)) ? 1 : 0;
  }
  if (!field.confidence.same_shape(field.disparity) || !field.valid_mask.same_shape(field.disparity))
    throw DataError("disparity sidecar dimensions differ for " + pfm_path.string());
  return field;
}

void write_depth(const std::filesystem::path& pfm_path, const DepthField& field) {
  write_pfm(pfm_path, field.depth);
}

DepthField read_depth(const std::filesystem::path& pfm_path) {
  auto depth = read_pfm(pfm_path);
  DepthField field(depth.width(), depth.height());
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x) {
      const double d = depth(x, y);
      if (std::isfinite(d) && d > 0.0) field.set(x, y, d);
    }
  return field;
}

}  // namespace densemap
