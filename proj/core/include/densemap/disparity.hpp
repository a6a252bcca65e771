#pragma once

#include <cstdint>

#include "densemap/image.hpp"

namespace densemap {

/// Per-pixel disparity (px) with confidence in [0,1] and validity mask.
struct DisparityField {
  Image<double> disparity;
  Image<double> confidence;
  Image<std::uint8_t> valid_mask;

  DisparityField() = default;
  DisparityField(int width, int height)
      : disparity(width, height, 0.0), confidence(width, height, 0.0), valid_mask(width, height, 0) {}

  int width() const { return disparity.width(); }
  int height() const { return disparity.height(); }
  bool valid(int x, int y) const { return valid_mask(x, y) != 0; }
  std::size_t valid_count() const {
    std::size_t n = 0;
    for (auto v : valid_mask.pixels()) n += v != 0;
    return n;
  }

  friend bool operator==(const DisparityField&, const DisparityField&) = default;
};

}  // namespace densemap
