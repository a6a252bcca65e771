#pragma once

#include <optional>
#include <vector>

#include "densemap/disparity.hpp"
#include "densemap/geometry.hpp"
#include "densemap/image.hpp"

namespace densemap {

/// Tuning for the Bayesian inverse-search matcher.
struct MatcherConfig {
  int patch_size = 16;
  int patch_stride = 0;  ///< 0 selects patch_size / 2.
  int pyramid_levels = 4;
  int max_iterations_per_patch = 12;
  /// Horizontal disturbances around the converged disparity scored by the
  /// softmax confidence. Must contain 0 and have odd size.
  std::vector<double> candidate_offsets{0.0, -0.5, 0.5, -1.0, 1.0};
  double sigma_s = 4.0;
  double probability_threshold = 0.15;
  double min_valid_patch_ratio = 0.75;
  double max_disparity = 0.0;  ///< 0 selects width / 4 of the input.
  double convergence_step = 0.01;
  double min_hessian = 1e-8;
  int num_threads = 1;

  int stride() const { return patch_stride > 0 ? patch_stride : std::max(1, patch_size / 2); }
  double max_disparity_for(int width) const { return max_disparity > 0.0 ? max_disparity : width / 4.0; }
  std::size_t zero_offset_index() const;
  void validate() const;
};

struct RectifiedStereoPair {
  GrayImage left;
  GrayImage right;
  std::optional<ColorImage> left_color;

  int width() const { return left.width(); }
  int height() const { return left.height(); }
  void validate() const;
};

/// One patch's converged search and confidence.
struct PatchEstimate {
  Vec2 center = Vec2::Zero();
  double disparity = 0.0;
  double scrf_probability = 0.0;
  double residual_ssd = 0.0;
  double sigma_r = 0.0;
  bool valid = false;
  bool degenerate = false;
};

/// Spatial Gaussian weights exp(-|offset|^2 / (2 sigma_s^2)) for every
/// pixel of a square patch, offsets measured from the patch center.
class KernelTable {
 public:
  KernelTable(int patch_size, double sigma_s);

  int patch_size() const { return size_; }
  double sigma_s() const { return sigma_s_; }
  /// Weight for patch pixel (i, j), 0 <= i, j < patch_size.
  double at(int i, int j) const { return weights_[static_cast<std::size_t>(j) * size_ + i]; }
  /// Offset of patch pixel index i from the patch center.
  double offset(int i) const { return i - 0.5 * (size_ - 1); }
  double weight_for_offset(double dx, double dy) const;

 private:
  int size_;
  double sigma_s_;
  std::vector<double> weights_;
};

/// Numerator/denominator buffers of the per-pixel fusion, plus the best
/// single-patch probability seen at each pixel.
struct FieldAccumulator {
  Image<double> weight_sum;
  Image<double> weighted_disparity;
  Image<double> best_probability;

  FieldAccumulator(int width, int height)
      : weight_sum(width, height, 0.0), weighted_disparity(width, height, 0.0), best_probability(width, height, 0.0) {}
  int width() const { return weight_sum.width(); }
  int height() const { return weight_sum.height(); }
};

struct SearchResult {
  double disparity = 0.0;
  double residual = 0.0;  ///< Mean squared intensity residual over sampled pixels.
  double coverage = 0.0;  ///< Fraction of patch pixels inside both images.
  int iterations = 0;
  bool degenerate = false;
  bool in_range = true;
};

struct ScrfResult {
  std::vector<double> probabilities;  ///< One per candidate offset.
  std::vector<double> residuals;      ///< SSD per candidate offset.
  double probability = 0.0;           ///< Probability of the zero offset.
  double sigma_r = 0.0;
  bool valid = false;
};

/// Image pyramid ordered coarse to fine; the last entry is the input.
/// Each level halves the previous one with a 2x2 box average.
std::vector<RectifiedStereoPair> build_pyramid(const RectifiedStereoPair& pair, const MatcherConfig& cfg);

/// 2x2 box-average downsample to floor(w/2) x floor(h/2).
GrayImage downsample(const GrayImage& image);

/// Inverse-compositional 1-D Gauss-Newton alignment of the left patch
/// centered at `center` against the right image. Disparity d maps left
/// pixel x to right pixel x - d.
SearchResult inverse_search_patch(const GrayImage& left, const GrayImage& right, const Vec2& center,
                                  double init_disparity, const MatcherConfig& cfg);

/// Softmax over -r_i / (2 sigma_r^2 s^2), sigma_r being the standard
/// deviation of the residuals (floored at 1e-12) and s the patch side.
std::vector<double> scrf_distribution(std::span<const double> residuals, int patch_side);

ScrfResult scrf_probability(const GrayImage& left, const GrayImage& right, const Vec2& center,
                            double converged_disparity, const MatcherConfig& cfg);

/// Full per-patch evaluation: search, confidence and validity checks.
/// `max_disparity` bounds the valid range at this image's scale.
PatchEstimate estimate_patch(const GrayImage& left, const GrayImage& right, const Vec2& center,
                             double init_disparity, const MatcherConfig& cfg, double max_disparity);

/// Adds a valid patch's kernel-weighted vote to every pixel it covers.
void accumulate_patch(FieldAccumulator& acc, const PatchEstimate& estimate, const KernelTable& kernel);

DisparityField finalize_field(const FieldAccumulator& acc, const MatcherConfig& cfg, double max_disparity);

/// Top-left corners of the patch grid along one axis.
std::vector<int> patch_origins(int extent, int patch_size, int stride);

struct MatchResult {
  DisparityField field;
  std::vector<PatchEstimate> finest_patches;
};

DisparityField match(const RectifiedStereoPair& pair, const MatcherConfig& cfg);
MatchResult match_with_patches(const RectifiedStereoPair& pair, const MatcherConfig& cfg);

}  // namespace densemap
