#include "densemap/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

namespace densemap {

std::size_t MatcherConfig::zero_offset_index() const {
  const auto it = std::find(candidate_offsets.begin(), candidate_offsets.end(), 0.0);
  if (it == candidate_offsets.end()) throw InvalidArgument("MatcherConfig: candidate_offsets must contain 0");
  return static_cast<std::size_t>(it - candidate_offsets.begin());
}

void MatcherConfig::validate() const {
  if (patch_size < 2) throw InvalidArgument("MatcherConfig: patch_size must be at least 2");
  if (patch_stride < 0) throw InvalidArgument("MatcherConfig: patch_stride must be non-negative");
  if (pyramid_levels < 1) throw InvalidArgument("MatcherConfig: pyramid_levels must be at least 1");
  if (max_iterations_per_patch < 1) throw InvalidArgument("MatcherConfig: max_iterations_per_patch must be >= 1");
  if (candidate_offsets.empty() || candidate_offsets.size() % 2 == 0)
    throw InvalidArgument("MatcherConfig: candidate_offsets must have odd cardinality");
  zero_offset_index();
  if (!(sigma_s > 0.0)) throw InvalidArgument("MatcherConfig: sigma_s must be positive");
  if (!(probability_threshold >= 0.0 && probability_threshold <= 1.0))
    throw InvalidArgument("MatcherConfig: probability_threshold must lie in [0, 1]");
  if (!(min_valid_patch_ratio > 0.0 && min_valid_patch_ratio <= 1.0))
    throw InvalidArgument("MatcherConfig: min_valid_patch_ratio must lie in (0, 1]");
  if (max_disparity < 0.0) throw InvalidArgument("MatcherConfig: max_disparity must be non-negative");
  if (num_threads < 1) throw InvalidArgument("MatcherConfig: num_threads must be at least 1");
}

void RectifiedStereoPair::validate() const {
  if (left.empty() || right.empty()) throw InvalidArgument("stereo pair: empty image");
  if (!left.same_shape(right)) throw InvalidArgument("stereo pair: left and right dimensions differ");
  if (left_color && !left_color->same_shape(left))
    throw InvalidArgument("stereo pair: color image dimensions differ");
}

KernelTable::KernelTable(int patch_size, double sigma_s) : size_(patch_size), sigma_s_(sigma_s) {
  if (patch_size < 1 || !(sigma_s > 0.0)) throw InvalidArgument("KernelTable: bad patch size or sigma");
  weights_.resize(static_cast<std::size_t>(patch_size) * patch_size);
  for (int j = 0; j < patch_size; ++j)
    for (int i = 0; i < patch_size; ++i)
      weights_[static_cast<std::size_t>(j) * patch_size + i] = weight_for_offset(offset(i), offset(j));
}

double KernelTable::weight_for_offset(double dx, double dy) const {
  return std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_s_ * sigma_s_));
}

GrayImage downsample(const GrayImage& image) {
  GrayImage out(image.width() / 2, image.height() / 2);
  for (int y = 0; y < out.height(); ++y) {
    const auto r0 = image.row(2 * y);
    const auto r1 = image.row(2 * y + 1);
    auto dst = out.row(y);
    for (int x = 0; x < out.width(); ++x)
      dst[x] = 0.25f * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
  }
  return out;
}

std::vector<RectifiedStereoPair> build_pyramid(const RectifiedStereoPair& pair, const MatcherConfig& cfg) {
  pair.validate();
  cfg.validate();
  const long min_dim = static_cast<long>(cfg.patch_size) << (cfg.pyramid_levels - 1);
  if (pair.width() < min_dim || pair.height() < min_dim)
    throw InvalidArgument("build_pyramid: images must be at least " + std::to_string(min_dim) + "x" +
                          std::to_string(min_dim) + " for patch size " + std::to_string(cfg.patch_size) + " and " +
                          std::to_string(cfg.pyramid_levels) + " levels");
  std::vector<RectifiedStereoPair> levels(static_cast<std::size_t>(cfg.pyramid_levels));
  levels.back() = pair;
  for (int i = cfg.pyramid_levels - 2; i >= 0; --i) {
    const auto& finer = levels[static_cast<std::size_t>(i) + 1];
    levels[static_cast<std::size_t>(i)].left = downsample(finer.left);
    levels[static_cast<std::size_t>(i)].right = downsample(finer.right);
  }
  return levels;
}

namespace {

struct PatchGeometry {
  int x0;
  int y0;
};

PatchGeometry patch_geometry(const Vec2& center, int patch_size) {
  const double half = 0.5 * (patch_size - 1);
  return {static_cast<int>(std::lround(center.x() - half)), static_cast<int>(std::lround(center.y() - half))};
}

// Linear interpolation along a row; caller guarantees 0 <= x <= width-1.
inline double sample_row(std::span<const float> row, double x) {
  const int x0 = static_cast<int>(x);
  const double a = x - x0;
  if (a == 0.0) return row[static_cast<std::size_t>(x0)];
  return (1.0 - a) * row[static_cast<std::size_t>(x0)] + a * row[static_cast<std::size_t>(x0) + 1];
}

inline bool right_inside(double xr, int width) { return xr >= 0.0 && xr <= width - 1; }

// Template samples and horizontal gradients of the left patch; pixels
// outside the left image are dropped.
struct Template {
  std::vector<int> xs;
  std::vector<int> ys;
  std::vector<double> values;
  std::vector<double> grad;
  double hessian = 0.0;
};

Template make_template(const GrayImage& left, PatchGeometry g, int patch_size) {
  Template t;
  const auto n = static_cast<std::size_t>(patch_size) * patch_size;
  t.xs.reserve(n);
  t.ys.reserve(n);
  t.values.reserve(n);
  t.grad.reserve(n);
  const int w = left.width();
  for (int j = 0; j < patch_size; ++j) {
    const int y = g.y0 + j;
    if (y < 0 || y >= left.height()) continue;
    const auto row = left.row(y);
    for (int i = 0; i < patch_size; ++i) {
      const int x = g.x0 + i;
      if (x < 0 || x >= w) continue;
      const int xm = std::max(0, x - 1);
      const int xp = std::min(w - 1, x + 1);
      const double gx = xp > xm ? (double{row[static_cast<std::size_t>(xp)]} - row[static_cast<std::size_t>(xm)]) /
                                      (xp - xm)
                                : 0.0;
      t.xs.push_back(x);
      t.ys.push_back(y);
      t.values.push_back(row[static_cast<std::size_t>(x)]);
      t.grad.push_back(gx);
      t.hessian += gx * gx;
    }
  }
  return t;
}

}  // namespace

SearchResult inverse_search_patch(const GrayImage& left, const GrayImage& right, const Vec2& center,
                                  double init_disparity, const MatcherConfig& cfg) {
  if (!left.same_shape(right)) throw InvalidArgument("inverse_search_patch: image dimensions differ");
  const int ps = cfg.patch_size;
  const auto g = patch_geometry(center, ps);
  const Template t = make_template(left, g, ps);
  const double max_disp = cfg.max_disparity_for(left.width());
  const int w = right.width();
  const double total = static_cast<double>(ps) * ps;

  SearchResult result;
  result.disparity = init_disparity;
  if (t.values.empty() || t.hessian < cfg.min_hessian) {
    result.degenerate = true;
    return result;
  }

  double d = init_disparity;
  for (int it = 0; it < cfg.max_iterations_per_patch; ++it) {
    double numer = 0.0;
    double hessian = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < t.values.size(); ++k) {
      const double xr = t.xs[k] - d;
      if (!right_inside(xr, w)) continue;
      const double diff = t.values[k] - sample_row(right.row(t.ys[k]), xr);
      numer += t.grad[k] * diff;
      hessian += t.grad[k] * t.grad[k];
      ++used;
    }
    if (used == 0) {
      result.in_range = false;
      break;
    }
    if (hessian < cfg.min_hessian) {
      result.degenerate = true;
      break;
    }
    const double step = numer / hessian;
    d -= step;
    result.iterations = it + 1;
    if (!(d >= -1.0 && d <= max_disp + 1.0)) {
      result.in_range = false;
      break;
    }
    if (std::abs(step) < cfg.convergence_step) break;
  }
  result.disparity = d;

  double ssd = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < t.values.size(); ++k) {
    const double xr = t.xs[k] - d;
    if (!right_inside(xr, w)) continue;
    const double diff = t.values[k] - sample_row(right.row(t.ys[k]), xr);
    ssd += diff * diff;
    ++used;
  }
  result.coverage = used / total;
  result.residual = used > 0 ? ssd / static_cast<double>(used) : 0.0;
  return result;
}

std::vector<double> scrf_distribution(std::span<const double> residuals, int patch_side) {
  const std::size_t n = residuals.size();
  if (n == 0) return {};
  const double mean = std::accumulate(residuals.begin(), residuals.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double r : residuals) var += (r - mean) * (r - mean);
  const double sigma_r = std::max(std::sqrt(var / static_cast<double>(n)), 1e-12);
  const double s = patch_side;
  const double denom = 2.0 * sigma_r * sigma_r * s * s;
  const double r_min = *std::min_element(residuals.begin(), residuals.end());
  std::vector<double> p(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::exp(-(residuals[i] - r_min) / denom);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

ScrfResult scrf_probability(const GrayImage& left, const GrayImage& right, const Vec2& center,
                            double converged_disparity, const MatcherConfig& cfg) {
  if (!left.same_shape(right)) throw InvalidArgument("scrf_probability: image dimensions differ");
  const int ps = cfg.patch_size;
  const auto g = patch_geometry(center, ps);
  const int w = right.width();
  const auto& offsets = cfg.candidate_offsets;
  const double lo = *std::min_element(offsets.begin(), offsets.end());
  const double hi = *std::max_element(offsets.begin(), offsets.end());

  ScrfResult result;
  result.residuals.assign(offsets.size(), 0.0);
  std::size_t used = 0;
  for (int j = 0; j < ps; ++j) {
    const int y = g.y0 + j;
    if (y < 0 || y >= left.height()) continue;
    const auto lrow = left.row(y);
    const auto rrow = right.row(y);
    for (int i = 0; i < ps; ++i) {
      const int x = g.x0 + i;
      if (x < 0 || x >= w) continue;
      // Every candidate is scored on the same pixel set.
      if (!right_inside(x - converged_disparity - hi, w) || !right_inside(x - converged_disparity - lo, w)) continue;
      const double v = lrow[static_cast<std::size_t>(x)];
      for (std::size_t c = 0; c < offsets.size(); ++c) {
        const double diff = v - sample_row(rrow, x - converged_disparity - offsets[c]);
        result.residuals[c] += diff * diff;
      }
      ++used;
    }
  }
  if (used == 0) return result;

  result.probabilities = scrf_distribution(result.residuals, ps);
  const std::size_t n = result.residuals.size();
  const double mean = std::accumulate(result.residuals.begin(), result.residuals.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double r : result.residuals) var += (r - mean) * (r - mean);
  result.sigma_r = std::max(std::sqrt(var / static_cast<double>(n)), 1e-12);
  result.probability = result.probabilities[cfg.zero_offset_index()];
  result.valid = true;
  return result;
}

PatchEstimate estimate_patch(const GrayImage& left, const GrayImage& right, const Vec2& center,
                             double init_disparity, const MatcherConfig& cfg, double max_disparity) {
  MatcherConfig local = cfg;
  local.max_disparity = max_disparity;
  PatchEstimate est;
  est.center = center;
  const auto search = inverse_search_patch(left, right, center, init_disparity, local);
  est.disparity = search.disparity;
  est.residual_ssd = search.residual;
  est.degenerate = search.degenerate;
  if (search.degenerate || !search.in_range || search.coverage < cfg.min_valid_patch_ratio ||
      !(search.disparity >= 0.0 && search.disparity <= max_disparity))
    return est;
  const auto scrf = scrf_probability(left, right, center, search.disparity, local);
  if (!scrf.valid) return est;
  est.scrf_probability = scrf.probability;
  est.sigma_r = scrf.sigma_r;
  est.valid = true;
  return est;
}

void accumulate_patch(FieldAccumulator& acc, const PatchEstimate& estimate, const KernelTable& kernel) {
  if (!estimate.valid || !(estimate.scrf_probability > 0.0)) return;
  const int ps = kernel.patch_size();
  const auto g = patch_geometry(estimate.center, ps);
  for (int j = 0; j < ps; ++j) {
    const int y = g.y0 + j;
    if (y < 0 || y >= acc.height()) continue;
    auto wsum = acc.weight_sum.row(y);
    auto wdisp = acc.weighted_disparity.row(y);
    auto best = acc.best_probability.row(y);
    for (int i = 0; i < ps; ++i) {
      const int x = g.x0 + i;
      if (x < 0 || x >= acc.width()) continue;
      const double w = estimate.scrf_probability * kernel.at(i, j);
      if (!(w > 0.0)) continue;
      const auto xi = static_cast<std::size_t>(x);
      wsum[xi] += w;
      wdisp[xi] += w * estimate.disparity;
      best[xi] = std::max(best[xi], estimate.scrf_probability);
    }
  }
}

DisparityField finalize_field(const FieldAccumulator& acc, const MatcherConfig& cfg, double max_disparity) {
  DisparityField field(acc.width(), acc.height());
  for (int y = 0; y < acc.height(); ++y)
    for (int x = 0; x < acc.width(); ++x) {
      const double wsum = acc.weight_sum(x, y);
      if (!(wsum > 0.0)) continue;
      const double d = acc.weighted_disparity(x, y) / wsum;
      const double conf = acc.best_probability(x, y);
      field.disparity(x, y) = d;
      field.confidence(x, y) = conf;
      field.valid_mask(x, y) = conf >= cfg.probability_threshold && d >= 0.0 && d <= max_disparity ? 1 : 0;
    }
  return field;
}

std::vector<int> patch_origins(int extent, int patch_size, int stride) {
  std::vector<int> origins;
  if (extent < patch_size) return origins;
  for (int o = 0; o + patch_size <= extent; o += stride) origins.push_back(o);
  if (origins.back() + patch_size < extent) origins.push_back(extent - patch_size);
  return origins;
}

namespace {

// Dense initialization for the next finer level: fused disparity where any
// patch voted, holes filled from the nearest voted pixel in the row, then
// from the nearest filled row.
Image<double> seed_from(const FieldAccumulator& acc, double max_disparity) {
  const int w = acc.width(), h = acc.height();
  Image<double> seed(w, h, 0.0);
  std::vector<std::uint8_t> row_filled(static_cast<std::size_t>(h), 0);
  std::vector<int> have;
  for (int y = 0; y < h; ++y) {
    have.clear();
    for (int x = 0; x < w; ++x) {
      const double ws = acc.weight_sum(x, y);
      if (ws > 0.0) {
        seed(x, y) = std::clamp(acc.weighted_disparity(x, y) / ws, 0.0, max_disparity);
        have.push_back(x);
      }
    }
    if (have.empty()) continue;
    row_filled[static_cast<std::size_t>(y)] = 1;
    std::size_t k = 0;
    for (int x = 0; x < w; ++x) {
      while (k + 1 < have.size() && std::abs(have[k + 1] - x) <= std::abs(have[k] - x)) ++k;
      if (have[k] != x) seed(x, y) = seed(have[k], y);
    }
  }
  for (int y = 0; y < h; ++y) {
    if (row_filled[static_cast<std::size_t>(y)]) continue;
    for (int dy = 1; dy < h; ++dy) {
      const int src = y - dy >= 0 && row_filled[static_cast<std::size_t>(y - dy)] ? y - dy
                      : y + dy < h && row_filled[static_cast<std::size_t>(y + dy)] ? y + dy
                                                                                   : -1;
      if (src < 0) continue;
      for (int x = 0; x < w; ++x) seed(x, y) = seed(x, src);
      break;
    }
  }
  return seed;
}

template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += workers) fn(i);
    });
}

}  // namespace

MatchResult match_with_patches(const RectifiedStereoPair& pair, const MatcherConfig& cfg) {
  const auto pyramid = build_pyramid(pair, cfg);
  const KernelTable kernel(cfg.patch_size, cfg.sigma_s);
  const double max_disp_full = cfg.max_disparity_for(pair.width());
  const int levels = static_cast<int>(pyramid.size());

  MatchResult result;
  Image<double> seed;
  for (int li = 0; li < levels; ++li) {
    const auto& level = pyramid[static_cast<std::size_t>(li)];
    const int scale_pow = levels - 1 - li;
    const double max_disp = max_disp_full / static_cast<double>(1 << scale_pow);
    const int w = level.width(), h = level.height();

    const auto xs = patch_origins(w, cfg.patch_size, cfg.stride());
    const auto ys = patch_origins(h, cfg.patch_size, cfg.stride());
    const double half = 0.5 * (cfg.patch_size - 1);
    std::vector<PatchEstimate> estimates(xs.size() * ys.size());
    parallel_for(estimates.size(), cfg.num_threads, [&](std::size_t idx) {
      const Vec2 center(xs[idx % xs.size()] + half, ys[idx / xs.size()] + half);
      double init = 0.0;
      if (!seed.empty()) {
        // Seed pixel grid is half resolution; pixel centers at integers.
        const double sx = std::clamp((center.x() + 0.5) * 0.5 - 0.5, 0.0, seed.width() - 1.0);
        const double sy = std::clamp((center.y() + 0.5) * 0.5 - 0.5, 0.0, seed.height() - 1.0);
        const int ix = static_cast<int>(sx), iy = static_cast<int>(sy);
        const int jx = std::min(ix + 1, seed.width() - 1), jy = std::min(iy + 1, seed.height() - 1);
        const double ax = sx - ix, ay = sy - iy;
        const double v = (1 - ay) * ((1 - ax) * seed(ix, iy) + ax * seed(jx, iy)) +
                         ay * ((1 - ax) * seed(ix, jy) + ax * seed(jx, jy));
        init = 2.0 * v;
      }
      estimates[idx] = estimate_patch(level.left, level.right, center, init, cfg, max_disp);
    });

    FieldAccumulator acc(w, h);
    for (const auto& est : estimates) accumulate_patch(acc, est, kernel);

    if (li + 1 < levels) {
      seed = seed_from(acc, max_disp);
    } else {
      result.field = finalize_field(acc, cfg, max_disp);
      result.finest_patches = std::move(estimates);
    }
  }
  return result;
}

DisparityField match(const RectifiedStereoPair& pair, const MatcherConfig& cfg) {
  return match_with_patches(pair, cfg).field;
}

}  // namespace densemap
