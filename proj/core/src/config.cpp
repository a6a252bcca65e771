#include "densemap/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace densemap {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config: '" + key + "' expects a number, got '" + value + "'");
}

// Shortest text that parses back to the same double.
std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(line_no) + ": empty key");
    cfg.entries_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse(in);
}

std::optional<std::string> KeyValueConfig::get_string(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  used_.insert(key);
  return it->second;
}

std::optional<double> KeyValueConfig::get_double(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  return to_double(key, *s);
}

std::optional<int> KeyValueConfig::get_int(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  try {
    std::size_t used = 0;
    const int v = std::stoi(*s, &used);
    if (used == s->size()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config: '" + key + "' expects an integer, got '" + *s + "'");
}

std::optional<bool> KeyValueConfig::get_bool(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  if (*s == "1" || *s == "true" || *s == "yes" || *s == "on") return true;
  if (*s == "0" || *s == "false" || *s == "no" || *s == "off") return false;
  throw InvalidArgument("config: '" + key + "' expects a boolean, got '" + *s + "'");
}

std::optional<std::vector<double>> KeyValueConfig::get_doubles(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  std::vector<double> out;
  std::stringstream ss(*s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  return out;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_)
    if (!used_.count(k)) out.push_back(k);
  return out;
}

void apply_matcher_config(const KeyValueConfig& kv, MatcherConfig& cfg) {
  if (auto v = kv.get_int("patch_size")) cfg.patch_size = *v;
  if (auto v = kv.get_int("patch_stride")) cfg.patch_stride = *v;
  if (auto v = kv.get_int("pyramid_levels")) cfg.pyramid_levels = *v;
  if (auto v = kv.get_int("max_iterations_per_patch")) cfg.max_iterations_per_patch = *v;
  if (auto v = kv.get_doubles("candidate_offsets")) cfg.candidate_offsets = *v;
  if (auto v = kv.get_double("sigma_s")) cfg.sigma_s = *v;
  if (auto v = kv.get_double("probability_threshold")) cfg.probability_threshold = *v;
  if (auto v = kv.get_double("min_valid_patch_ratio")) cfg.min_valid_patch_ratio = *v;
  if (auto v = kv.get_double("max_disparity")) cfg.max_disparity = *v;
  if (auto v = kv.get_double("convergence_step")) cfg.convergence_step = *v;
  if (auto v = kv.get_double("min_hessian")) cfg.min_hessian = *v;
  if (auto v = kv.get_int("num_threads")) cfg.num_threads = *v;
  cfg.validate();
}

void apply_rig_config(const KeyValueConfig& kv, StereoRig& rig) {
  if (auto v = kv.get_double("fx")) rig.fx = *v;
  if (auto v = kv.get_double("fy")) rig.fy = *v;
  if (auto v = kv.get_double("cx")) rig.cx = *v;
  if (auto v = kv.get_double("cy")) rig.cy = *v;
  if (auto v = kv.get_double("baseline")) rig.baseline = *v;
  if (auto v = kv.get_int("width")) rig.width = *v;
  if (auto v = kv.get_int("height")) rig.height = *v;
  rig.validate();
}

std::string format_matcher_config(const MatcherConfig& cfg) {
  std::ostringstream out;
  out << "patch_size = " << cfg.patch_size << '\n';
  out << "patch_stride = " << cfg.stride() << '\n';
  out << "pyramid_levels = " << cfg.pyramid_levels << '\n';
  out << "max_iterations_per_patch = " << cfg.max_iterations_per_patch << '\n';
  out << "candidate_offsets = ";
  for (std::size_t i = 0; i < cfg.candidate_offsets.size(); ++i)
    out << (i ? "," : "") << num(cfg.candidate_offsets[i]);
  out << '\n';
  out << "sigma_s = " << num(cfg.sigma_s) << '\n';
  out << "probability_threshold = " << num(cfg.probability_threshold) << '\n';
  out << "min_valid_patch_ratio = " << num(cfg.min_valid_patch_ratio) << '\n';
  out << "max_disparity = " << num(cfg.max_disparity) << '\n';
  out << "convergence_step = " << num(cfg.convergence_step) << '\n';
  out << "min_hessian = " << num(cfg.min_hessian) << '\n';
  out << "num_threads = " << cfg.num_threads << '\n';
  return out.str();
}

std::string format_rig_config(const StereoRig& rig) {
  std::ostringstream out;
  out << "fx = " << num(rig.fx) << "\nfy = " << num(rig.fy) << "\ncx = " << num(rig.cx) << "\ncy = " << num(rig.cy)
      << "\nbaseline = " << num(rig.baseline) << "\nwidth = " << rig.width << "\nheight = " << rig.height << '\n';
  return out.str();
}

MatcherConfig load_matcher_config(const std::filesystem::path& path) {
  const auto kv = KeyValueConfig::load(path);
  MatcherConfig cfg;
  apply_matcher_config(kv, cfg);
  return cfg;
}

}  // namespace densemap
