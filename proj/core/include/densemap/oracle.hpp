#pragma once

#include "densemap/disparity.hpp"
#include "densemap/matcher.hpp"

namespace densemap {

/// Exhaustive SSD block matcher, the reference for `match`.
struct OracleConfig {
  int window_size = 9;
  int max_disparity = 16;
  bool subpixel_refine = false;

  void validate() const;
};

/// Per pixel, the integer disparity in [0, max_disparity] minimizing the
/// window SSD, ties going to the smaller disparity. A pixel is valid only
/// if its window stays inside both images for every candidate.
DisparityField exhaustive_disparity(const RectifiedStereoPair& pair, const OracleConfig& cfg);

}  // namespace densemap
