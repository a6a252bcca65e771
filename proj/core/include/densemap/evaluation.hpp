#pragma once

#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "densemap/disparity.hpp"
#include "densemap/mosaic.hpp"
#include "densemap/surface.hpp"

namespace densemap {

struct DisparityErrorSummary {
  double mean = 0.0;
  double median = 0.0;
  double fraction_within_half_px = 0.0;
  std::size_t compared = 0;
};

/// Endpoint error statistics over pixels valid in both fields.
DisparityErrorSummary disparity_epe(const DisparityField& estimate, const DisparityField& truth);

/// Exact nearest-neighbor queries over a fixed point set (k-d tree).
class PointIndex {
 public:
  explicit PointIndex(std::vector<Vec3> points);
  PointIndex(PointIndex&&) noexcept;
  PointIndex& operator=(PointIndex&&) noexcept;
  ~PointIndex();

  std::size_t size() const;
  double nearest_distance(const Vec3& query) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Brute-force nearest distance; reference for PointIndex.
double brute_force_nearest_distance(std::span<const Vec3> reference, const Vec3& query);

/// Analytic surface or sampled reference cloud.
using Reference = std::variant<Surface, std::shared_ptr<const PointIndex>>;

Reference make_cloud_reference(std::vector<Vec3> points);

double nearest_reference_distance(const Vec3& point, const Reference& reference);

struct EvaluationReport {
  std::vector<double> error_set;  ///< Inlier distances, in map order.
  double mean_mm = 0.0;
  double median_mm = 0.0;
  std::size_t inlier_count = 0;
  std::size_t outlier_count = 0;
  std::size_t invalid_count = 0;  ///< Non-finite positions or distances.
  double cutoff_mm = 5.0;
};

/// Distances at or above `cutoff_mm` are counted as outliers and left out
/// of the error set; mean and median cover the error set only.
EvaluationReport map_to_surface_error(std::span<const MapPoint> map, const Reference& reference,
                                      double cutoff_mm = 5.0);

double median_of(std::vector<double> values);

}  // namespace densemap
