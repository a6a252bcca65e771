#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "densemap/geometry.hpp"
#include "densemap/matcher.hpp"

namespace densemap {

/// Flat `key = value` text config. `#` starts a comment; blank lines are
/// ignored. Lookups record which keys were consumed so callers can reject
/// unknown keys.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }

  std::optional<std::string> get_string(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  std::optional<int> get_int(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;
  std::optional<std::vector<double>> get_doubles(const std::string& key) const;

  std::vector<std::string> unused_keys() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> used_;
};

/// Overrides fields present in `kv`; keys match the field names
/// (patch_size, patch_stride, ..., candidate_offsets as a comma list).
void apply_matcher_config(const KeyValueConfig& kv, MatcherConfig& cfg);
/// Keys fx, fy, cx, cy, baseline, width, height.
void apply_rig_config(const KeyValueConfig& kv, StereoRig& rig);

std::string format_matcher_config(const MatcherConfig& cfg);
std::string format_rig_config(const StereoRig& rig);

MatcherConfig load_matcher_config(const std::filesystem::path& path);

}  // namespace densemap
