#include "densemap/oracle.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace densemap {

void OracleConfig::validate() const {
  if (window_size < 1 || window_size % 2 == 0) throw InvalidArgument("OracleConfig: window_size must be odd");
  if (max_disparity < 1) throw InvalidArgument("OracleConfig: max_disparity must be at least 1");
}

DisparityField exhaustive_disparity(const RectifiedStereoPair& pair, const OracleConfig& cfg) {
  pair.validate();
  cfg.validate();
  const int w = pair.width(), h = pair.height();
  const int r = cfg.window_size / 2;
  DisparityField field(w, h);
  std::vector<double> cost(static_cast<std::size_t>(cfg.max_disparity) + 1);

  for (int y = r; y < h - r; ++y) {
    for (int x = r + cfg.max_disparity; x < w - r; ++x) {
      int best = -1;
      double best_cost = std::numeric_limits<double>::infinity();
      for (int d = 0; d <= cfg.max_disparity; ++d) {
        double ssd = 0.0;
        for (int dy = -r; dy <= r; ++dy) {
          const auto lrow = pair.left.row(y + dy);
          const auto rrow = pair.right.row(y + dy);
          for (int dx = -r; dx <= r; ++dx) {
            const double diff = double{lrow[static_cast<std::size_t>(x + dx)]} - rrow[static_cast<std::size_t>(x + dx - d)];
            ssd += diff * diff;
          }
        }
        cost[static_cast<std::size_t>(d)] = ssd;
        if (ssd < best_cost) {
          best_cost = ssd;
          best = d;
        }
      }
      double disparity = best;
      if (cfg.subpixel_refine && best > 0 && best < cfg.max_disparity) {
        const double cm = cost[static_cast<std::size_t>(best) - 1];
        const double c0 = cost[static_cast<std::size_t>(best)];
        const double cp = cost[static_cast<std::size_t>(best) + 1];
        const double curvature = cm - 2.0 * c0 + cp;
        if (curvature > 0.0) disparity += 0.5 * (cm - cp) / curvature;
      }
      field.disparity(x, y) = disparity;
      field.confidence(x, y) = 1.0;
      field.valid_mask(x, y) = 1;
    }
  }
  return field;
}

}  // namespace densemap
