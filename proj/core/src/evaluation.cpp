#include "densemap/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace densemap {

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

DisparityErrorSummary disparity_epe(const DisparityField& estimate, const DisparityField& truth) {
  if (estimate.width() != truth.width() || estimate.height() != truth.height())
    throw InvalidArgument("disparity_epe: dimension mismatch");
  std::vector<double> errors;
  std::size_t within = 0;
  for (int y = 0; y < truth.height(); ++y)
    for (int x = 0; x < truth.width(); ++x) {
      if (!estimate.valid(x, y) || !truth.valid(x, y)) continue;
      const double e = std::abs(estimate.disparity(x, y) - truth.disparity(x, y));
      errors.push_back(e);
      within += e <= 0.5;
    }
  DisparityErrorSummary s;
  s.compared = errors.size();
  if (errors.empty()) return s;
  s.mean = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
  s.fraction_within_half_px = static_cast<double>(within) / static_cast<double>(errors.size());
  s.median = median_of(std::move(errors));
  return s;
}

struct PointIndex::Impl {
  struct Node {
    int axis = -1;  // -1 marks a leaf
    std::uint32_t begin = 0, end = 0;
    std::uint32_t left = 0, right = 0;
    double split = 0.0;
  };
  static constexpr std::uint32_t kLeafSize = 16;

  std::vector<Vec3> points;
  std::vector<Node> nodes;

  std::uint32_t build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::uint32_t>(nodes.size());
    nodes.push_back({});
    if (end - begin <= kLeafSize) {
      nodes[id].begin = begin;
      nodes[id].end = end;
      return id;
    }
    Vec3 lo = points[begin], hi = points[begin];
    for (auto i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points[i]);
      hi = hi.cwiseMax(points[i]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const auto mid = begin + (end - begin) / 2;
    std::nth_element(points.begin() + begin, points.begin() + mid, points.begin() + end,
                     [axis](const Vec3& a, const Vec3& b) { return a[axis] < b[axis]; });
    const double split = points[mid][axis];
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes[id].axis = axis;
    nodes[id].split = split;
    nodes[id].left = left;
    nodes[id].right = right;
    return id;
  }

  void search(std::uint32_t id, const Vec3& q, double& best_sq) const {
    const Node& n = nodes[id];
    if (n.axis < 0) {
      for (auto i = n.begin; i < n.end; ++i) best_sq = std::min(best_sq, (points[i] - q).squaredNorm());
      return;
    }
    const double diff = q[n.axis] - n.split;
    const auto near = diff < 0.0 ? n.left : n.right;
    const auto far = diff < 0.0 ? n.right : n.left;
    search(near, q, best_sq);
    if (diff * diff < best_sq) search(far, q, best_sq);
  }
};

PointIndex::PointIndex(std::vector<Vec3> points) : impl_(std::make_unique<Impl>()) {
  if (points.empty()) throw InvalidArgument("PointIndex: empty reference");
  if (points.size() > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("PointIndex: too many points");
  impl_->points = std::move(points);
  impl_->build(0, static_cast<std::uint32_t>(impl_->points.size()));
}

PointIndex::PointIndex(PointIndex&&) noexcept = default;
PointIndex& PointIndex::operator=(PointIndex&&) noexcept = default;
PointIndex::~PointIndex() = default;

std::size_t PointIndex::size() const { return impl_->points.size(); }

double PointIndex::nearest_distance(const Vec3& query) const {
  double best_sq = std::numeric_limits<double>::infinity();
  impl_->search(0, query, best_sq);
  return std::sqrt(best_sq);
}

double brute_force_nearest_distance(std::span<const Vec3> reference, const Vec3& query) {
  if (reference.empty()) throw InvalidArgument("nearest distance: empty reference");
  double best_sq = std::numeric_limits<double>::infinity();
  for (const auto& p : reference) best_sq = std::min(best_sq, (p - query).squaredNorm());
  return std::sqrt(best_sq);
}

Reference make_cloud_reference(std::vector<Vec3> points) {
  return std::make_shared<const PointIndex>(std::move(points));
}

double nearest_reference_distance(const Vec3& point, const Reference& reference) {
  if (const auto* s = std::get_if<Surface>(&reference)) return surface_distance(*s, point);
  const auto& index = std::get<std::shared_ptr<const PointIndex>>(reference);
  if (!index) throw InvalidArgument("nearest_reference_distance: empty reference");
  return index->nearest_distance(point);
}

EvaluationReport map_to_surface_error(std::span<const MapPoint> map, const Reference& reference, double cutoff_mm) {
  if (const auto* idx = std::get_if<std::shared_ptr<const PointIndex>>(&reference); idx && !*idx)
    throw InvalidArgument("map_to_surface_error: empty reference");
  if (!(cutoff_mm > 0.0)) throw InvalidArgument("map_to_surface_error: cutoff must be positive");
  if (map.empty()) throw InvalidArgument("map_to_surface_error: empty map");
  EvaluationReport report;
  report.cutoff_mm = cutoff_mm;
  for (const auto& p : map) {
    const double e = p.position.allFinite() ? nearest_reference_distance(p.position, reference)
                                            : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(e)) {
      ++report.invalid_count;
    } else if (e >= cutoff_mm) {
      ++report.outlier_count;
    } else {
      report.error_set.push_back(e);
    }
  }
  report.inlier_count = report.error_set.size();
  if (!report.error_set.empty()) {
    report.mean_mm = std::accumulate(report.error_set.begin(), report.error_set.end(), 0.0) /
                     static_cast<double>(report.error_set.size());
    report.median_mm = median_of(report.error_set);
  }
  return report;
}

}  // namespace densemap
