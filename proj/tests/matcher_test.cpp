#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "densemap/matcher.hpp"
#include "densemap/evaluation.hpp"
#include "densemap/synth.hpp"
#include "test_support.hpp"

namespace densemap {
namespace {

using testing::pixel_texture;

GrayImage constant_image(int w, int h, float v) { return GrayImage(w, h, v); }

RectifiedStereoPair identical_pair(int w, int h, std::uint64_t seed) {
  auto pair = make_shifted_pair(pixel_texture(seed), w, h, 0.0);
  pair.right = pair.left;
  return pair;
}

// Exhaustive SSD over integer shifts of a whole patch with a parabola fit
// through the best three costs.
double oracle_patch_disparity(const GrayImage& left, const GrayImage& right, int x0, int y0, int ps, int max_d) {
  std::vector<double> cost(static_cast<std::size_t>(max_d) + 1);
  for (int d = 0; d <= max_d; ++d) {
    double ssd = 0.0;
    for (int j = 0; j < ps; ++j)
      for (int i = 0; i < ps; ++i) {
        const double diff = double{left(x0 + i, y0 + j)} - right(x0 + i - d, y0 + j);
        ssd += diff * diff;
      }
    cost[static_cast<std::size_t>(d)] = ssd;
  }
  const auto best = static_cast<int>(std::min_element(cost.begin(), cost.end()) - cost.begin());
  if (best == 0 || best == max_d) return best;
  const double cm = cost[best - 1], c0 = cost[best], cp = cost[best + 1];
  return best + 0.5 * (cm - cp) / (cm - 2 * c0 + cp);
}

TEST(Pyramid, HalvesDimensions) {
  RectifiedStereoPair pair{constant_image(640, 480, 0.5f), constant_image(640, 480, 0.5f), std::nullopt};
  const auto levels = build_pyramid(pair, MatcherConfig{});
  ASSERT_EQ(levels.size(), 4u);
  const int expect_w[] = {80, 160, 320, 640};
  const int expect_h[] = {60, 120, 240, 480};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(levels[i].width(), expect_w[i]);
    EXPECT_EQ(levels[i].height(), expect_h[i]);
  }
  for (const auto& level : levels)
    for (float v : level.left.pixels()) EXPECT_FLOAT_EQ(v, 0.5f);
}

TEST(Pyramid, BoxAverages) {
  GrayImage img(4, 2);
  const float vals[] = {0, 1, 2, 3, 4, 5, 6, 7};
  for (int i = 0; i < 8; ++i) img(i % 4, i / 4) = vals[i];
  const auto half = downsample(img);
  ASSERT_EQ(half.width(), 2);
  ASSERT_EQ(half.height(), 1);
  EXPECT_FLOAT_EQ(half(0, 0), 2.5f);
  EXPECT_FLOAT_EQ(half(1, 0), 4.5f);
}

TEST(Pyramid, RejectsTooSmallImage) {
  RectifiedStereoPair pair{constant_image(8, 8, 0.5f), constant_image(8, 8, 0.5f), std::nullopt};
  try {
    build_pyramid(pair, MatcherConfig{});
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("128x128"), std::string::npos) << e.what();
  }
}

TEST(InverseSearch, ZeroParallaxIdentity) {
  const auto pair = identical_pair(64, 64, 3);
  const auto r = inverse_search_patch(pair.left, pair.right, Vec2(31.5, 31.5), 0.0, MatcherConfig{});
  EXPECT_FALSE(r.degenerate);
  EXPECT_EQ(r.disparity, 0.0);
  EXPECT_EQ(r.residual, 0.0);
  EXPECT_DOUBLE_EQ(r.coverage, 1.0);
}

TEST(InverseSearch, RecoversThreePixelShift) {
  const auto pair = make_shifted_pair(pixel_texture(5, 3, 4.0), 64, 64, 3.0);
  const int x0 = 24, y0 = 24;
  const double oracle = oracle_patch_disparity(pair.left, pair.right, x0, y0, 16, 10);
  ASSERT_NEAR(oracle, 3.0, 0.05) << "oracle does not see the constructed shift";
  const auto r = inverse_search_patch(pair.left, pair.right, Vec2(x0 + 7.5, y0 + 7.5), 2.0, MatcherConfig{});
  EXPECT_FALSE(r.degenerate);
  EXPECT_TRUE(r.in_range);
  EXPECT_NEAR(r.disparity, 3.0, 0.05);
  EXPECT_NEAR(r.disparity, oracle, 0.05);
}

TEST(InverseSearch, UniformPatchIsDegenerate) {
  const auto img = constant_image(64, 64, 0.3f);
  const auto r = inverse_search_patch(img, img, Vec2(31.5, 31.5), 0.0, MatcherConfig{});
  EXPECT_TRUE(r.degenerate);
}

TEST(InverseSearch, RunawayDisparityIsOutOfRange) {
  auto pair = make_shifted_pair(pixel_texture(9), 64, 64, 0.0);
  MatcherConfig cfg;
  cfg.max_disparity = 2.0;
  const auto r = inverse_search_patch(pair.left, pair.right, Vec2(40.5, 31.5), 30.0, cfg);
  EXPECT_FALSE(r.in_range);
}

TEST(Scrf, EqualResidualsGiveUniformProbability) {
  const std::vector<double> r(5, 0.37);
  const auto p = scrf_distribution(r, 16);
  for (double v : p) EXPECT_NEAR(v, 0.2, 1e-12);
}

TEST(Scrf, SingleCandidateIsCertain) {
  const std::vector<double> r{0.5};
  EXPECT_DOUBLE_EQ(scrf_distribution(r, 16)[0], 1.0);

  const auto pair = make_shifted_pair(pixel_texture(2), 64, 64, 2.0);
  MatcherConfig cfg;
  cfg.candidate_offsets = {0.0};
  const auto s = scrf_probability(pair.left, pair.right, Vec2(31.5, 31.5), 2.0, cfg);
  ASSERT_TRUE(s.valid);
  EXPECT_DOUBLE_EQ(s.probability, 1.0);
}

TEST(Scrf, WorkedSoftmaxExample) {
  // Residuals {0,R,R,R,R}: sigma_r = 0.4 R, so R / (2 sigma_r^2 s^2) = 1
  // when R = 1 / (0.32 s^2).
  const int s = 16;
  const double R = 1.0 / (0.32 * s * s);
  const std::vector<double> r{0.0, R, R, R, R};
  const double expected = 1.0 / (1.0 + 4.0 * std::exp(-1.0));
  EXPECT_NEAR(expected, 0.4046, 5e-5);
  EXPECT_NEAR(scrf_distribution(r, s)[0], expected, 1e-9);
}

TEST(Scrf, DistributionSumsToOne) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> r(1 + 2 * (trial % 4));
    for (double& v : r) v = u(rng) * (trial % 3 == 0 ? 1e-6 : 1.0);
    const auto p = scrf_distribution(r, 8 + trial % 9);
    double sum = 0.0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Scrf, UniformImagesGiveUniformProbability) {
  const auto img = constant_image(64, 64, 0.6f);
  const auto s = scrf_probability(img, img, Vec2(31.5, 31.5), 3.0, MatcherConfig{});
  ASSERT_TRUE(s.valid);
  EXPECT_NEAR(s.probability, 0.2, 1e-12);
  EXPECT_DOUBLE_EQ(s.sigma_r, 1e-12);
}

TEST(Scrf, AllCandidatesOutOfBoundsIsInvalid) {
  const auto pair = identical_pair(64, 64, 4);
  const auto s = scrf_probability(pair.left, pair.right, Vec2(7.5, 31.5), 40.0, MatcherConfig{});
  EXPECT_FALSE(s.valid);
}

TEST(Kernel, SymmetricAndUnitAtCenter) {
  const KernelTable odd(5, 4.0);
  EXPECT_DOUBLE_EQ(odd.at(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(odd.weight_for_offset(0.0, 0.0), 1.0);
  const KernelTable k(16, 4.0);
  for (int j = 0; j < 16; ++j)
    for (int i = 0; i < 16; ++i) {
      EXPECT_GT(k.at(i, j), 0.0);
      EXPECT_LE(k.at(i, j), 1.0);
      EXPECT_DOUBLE_EQ(k.at(i, j), k.at(15 - i, 15 - j));
      EXPECT_DOUBLE_EQ(k.weight_for_offset(k.offset(i), k.offset(j)), k.weight_for_offset(-k.offset(i), -k.offset(j)));
    }
  EXPECT_NEAR(k.at(0, 7), std::exp(-(7.5 * 7.5 + 0.25) / 32.0), 1e-15);
}

PatchEstimate patch_at(double cx, double cy, double disparity, double p) {
  PatchEstimate e;
  e.center = Vec2(cx, cy);
  e.disparity = disparity;
  e.scrf_probability = p;
  e.valid = true;
  return e;
}

TEST(Accumulate, SinglePatchReproducesDisparity) {
  const KernelTable k(16, 4.0);
  FieldAccumulator acc(32, 32);
  accumulate_patch(acc, patch_at(15.5, 15.5, 7.25, 0.6), k);
  const auto f = finalize_field(acc, MatcherConfig{}, 20.0);
  for (int y = 8; y < 24; ++y)
    for (int x = 8; x < 24; ++x) {
      EXPECT_DOUBLE_EQ(f.disparity(x, y), 7.25);
      EXPECT_TRUE(f.valid(x, y));
      EXPECT_DOUBLE_EQ(f.confidence(x, y), 0.6);
    }
  EXPECT_FALSE(f.valid(7, 15));
  EXPECT_FALSE(f.valid(24, 15));
}

TEST(Accumulate, WeightedMeanOfTwoPatches) {
  const KernelTable k(16, 4.0);
  FieldAccumulator acc(32, 32);
  accumulate_patch(acc, patch_at(15.5, 15.5, 2.0, 0.2), k);
  accumulate_patch(acc, patch_at(15.5, 15.5, 4.0, 0.6), k);
  const auto f = finalize_field(acc, MatcherConfig{}, 20.0);
  EXPECT_NEAR(f.disparity(15, 15), 3.5, 1e-12);
  EXPECT_DOUBLE_EQ(f.confidence(15, 15), 0.6);
}

TEST(Accumulate, ZeroProbabilityLeavesAccumulatorsUntouched) {
  const KernelTable k(16, 4.0);
  FieldAccumulator acc(32, 32);
  accumulate_patch(acc, patch_at(15.5, 15.5, 2.0, 0.5), k);
  const auto before = acc.weight_sum;
  const auto before_d = acc.weighted_disparity;
  accumulate_patch(acc, patch_at(15.5, 15.5, 9.0, 0.0), k);
  auto invalid = patch_at(15.5, 15.5, 9.0, 0.9);
  invalid.valid = false;
  accumulate_patch(acc, invalid, k);
  EXPECT_EQ(acc.weight_sum, before);
  EXPECT_EQ(acc.weighted_disparity, before_d);
}

TEST(Accumulate, PatchesHangingOffTheImageAreClipped) {
  const KernelTable k(16, 4.0);
  FieldAccumulator acc(20, 20);
  accumulate_patch(acc, patch_at(2.5, 2.5, 1.0, 0.5), k);
  EXPECT_GT(acc.weight_sum(0, 0), 0.0);
  EXPECT_EQ(acc.weight_sum(11, 11), 0.0);
}

TEST(Finalize, ThresholdsBestProbability) {
  const KernelTable k(16, 4.0);
  FieldAccumulator acc(48, 16);
  accumulate_patch(acc, patch_at(7.5, 7.5, 3.0, 0.10), k);
  accumulate_patch(acc, patch_at(39.5, 7.5, 3.0, 0.9), k);
  const auto f = finalize_field(acc, MatcherConfig{}, 20.0);
  EXPECT_FALSE(f.valid(7, 7));
  EXPECT_TRUE(f.valid(39, 7));
  EXPECT_FALSE(f.valid(24, 7)) << "uncovered pixel";
  EXPECT_EQ(acc.weight_sum(24, 7), 0.0);

  FieldAccumulator far(16, 16);
  accumulate_patch(far, patch_at(7.5, 7.5, 25.0, 0.9), k);
  EXPECT_FALSE(finalize_field(far, MatcherConfig{}, 20.0).valid(7, 7)) << "disparity above range";
}

TEST(Finalize, FusedDisparityIsConvexCombination) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(0.0, 40.0), disp(0.0, 30.0), prob(0.01, 1.0);
  const KernelTable k(16, 4.0);
  FieldAccumulator acc(48, 48);
  std::vector<PatchEstimate> patches;
  for (int i = 0; i < 60; ++i) {
    patches.push_back(patch_at(std::floor(pos(rng)) + 0.5, std::floor(pos(rng)) + 0.5, disp(rng), prob(rng)));
    accumulate_patch(acc, patches.back(), k);
  }
  MatcherConfig cfg;
  cfg.probability_threshold = 0.0;
  const auto f = finalize_field(acc, cfg, 100.0);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) {
      double lo = 1e9, hi = -1e9;
      for (const auto& p : patches) {
        if (std::abs(x - p.center.x()) <= 8.0 && std::abs(y - p.center.y()) <= 8.0) {
          lo = std::min(lo, p.disparity);
          hi = std::max(hi, p.disparity);
        }
      }
      if (lo > hi) continue;
      EXPECT_GE(f.disparity(x, y), lo - 1e-9);
      EXPECT_LE(f.disparity(x, y), hi + 1e-9);
    }
}

TEST(PatchGrid, CoversImageEdges) {
  EXPECT_EQ(patch_origins(64, 16, 8), (std::vector<int>{0, 8, 16, 24, 32, 40, 48}));
  EXPECT_EQ(patch_origins(70, 16, 8), (std::vector<int>{0, 8, 16, 24, 32, 40, 48, 54}));
  EXPECT_TRUE(patch_origins(10, 16, 8).empty());
}

TEST(MatcherConfigTest, Defaults) {
  const MatcherConfig cfg;
  EXPECT_EQ(cfg.candidate_offsets, (std::vector<double>{0.0, -0.5, 0.5, -1.0, 1.0}));
  EXPECT_EQ(cfg.zero_offset_index(), 0u);
  EXPECT_DOUBLE_EQ(cfg.sigma_s, 4.0);
  EXPECT_DOUBLE_EQ(cfg.probability_threshold, 0.15);
  EXPECT_DOUBLE_EQ(cfg.min_valid_patch_ratio, 0.75);
  EXPECT_DOUBLE_EQ(EvaluationReport{}.cutoff_mm, 5.0);
}

TEST(MatcherConfigTest, RejectsBadSettings) {
  MatcherConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.candidate_offsets = {0.0, 0.5};
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.candidate_offsets = {-0.5, 0.25, 0.5};
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = MatcherConfig{};
  cfg.min_valid_patch_ratio = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = MatcherConfig{};
  cfg.sigma_s = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = MatcherConfig{};
  EXPECT_EQ(cfg.stride(), 8);
  EXPECT_DOUBLE_EQ(cfg.max_disparity_for(640), 160.0);
}

TEST(Match, ZeroParallax) {
  const auto pair = identical_pair(256, 192, 12);
  MatcherConfig cfg;
  cfg.pyramid_levels = 3;
  const auto f = match(pair, cfg);
  ASSERT_GT(f.valid_count(), 0u);
  std::size_t small = 0;
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x)
      if (f.valid(x, y)) small += std::abs(f.disparity(x, y)) < 0.1;
  EXPECT_GE(static_cast<double>(small), 0.99 * static_cast<double>(f.valid_count()));
}

TEST(Match, FrontoParallelPlane) {
  const auto frame = render_pair(plane_scene(testing::desk_rig(), 12.5), 0);
  const auto f = match(frame.pair, MatcherConfig{});
  std::size_t good = 0;
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x)
      if (f.valid(x, y)) good += std::abs(f.disparity(x, y) - 12.5) <= 0.25;
  ASSERT_GT(f.valid_count(), 0u);
  EXPECT_GE(static_cast<double>(good), 0.95 * static_cast<double>(f.valid_count()));
}

TEST(Match, SlantedRamp) {
  const auto frame = render_pair(slanted_ramp_scene(testing::desk_rig(), 5.0, 20.0), 0);
  const auto f = match(frame.pair, MatcherConfig{});
  const auto epe = disparity_epe(f, frame.disparity);
  ASSERT_GT(epe.compared, 0u);
  EXPECT_LE(epe.mean, 0.5);
}

TEST(Match, ValidPixelsRespectThresholdAndRange) {
  const auto frame = render_pair(slanted_ramp_scene(testing::desk_rig(320, 256), 2.0, 10.0), 0);
  MatcherConfig cfg;
  cfg.pyramid_levels = 3;
  const auto f = match(frame.pair, cfg);
  const double max_d = cfg.max_disparity_for(320);
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x)
      if (f.valid(x, y)) {
        EXPECT_GE(f.confidence(x, y), cfg.probability_threshold);
        EXPECT_GE(f.disparity(x, y), 0.0);
        EXPECT_LE(f.disparity(x, y), max_d);
      }
}

TEST(Match, InvariantToSharedIntensityOffset) {
  auto pair = make_shifted_pair(pixel_texture(31), 256, 192, 6.0);
  MatcherConfig cfg;
  cfg.pyramid_levels = 3;
  const auto base = match(pair, cfg);
  for (auto* img : {&pair.left, &pair.right})
    for (float& v : img->pixels()) v += 0.125f;
  const auto shifted = match(pair, cfg);
  for (int y = 0; y < base.height(); ++y)
    for (int x = 0; x < base.width(); ++x)
      if (base.valid(x, y) && shifted.valid(x, y)) EXPECT_NEAR(base.disparity(x, y), shifted.disparity(x, y), 1e-3);
}

TEST(Match, InvariantToSharedHorizontalTranslation) {
  // Cropping both images by a multiple of the coarsest-level stride keeps
  // the patch grid aligned with the content.
  const int crop = 64;
  const auto wide = make_shifted_pair(pixel_texture(41), 384 + crop, 192, 7.0);
  MatcherConfig cfg;
  cfg.pyramid_levels = 3;
  const auto cropped_of = [&](const GrayImage& img) {
    GrayImage out(img.width() - crop, img.height());
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x) out(x, y) = img(x + crop, y);
    return out;
  };
  RectifiedStereoPair narrow{cropped_of(wide.left), cropped_of(wide.right), std::nullopt};
  cfg.max_disparity = 40.0;
  const auto a = match(wide, cfg);
  const auto b = match(narrow, cfg);
  int compared = 0;
  for (int y = 40; y < 150; ++y)
    for (int x = 100; x < 260; ++x) {
      if (!a.valid(x + crop, y) || !b.valid(x, y)) continue;
      EXPECT_NEAR(a.disparity(x + crop, y), b.disparity(x, y), 1e-3);
      ++compared;
    }
  EXPECT_GT(compared, 1000);
}

TEST(Match, DeterministicAcrossRunsAndThreadCounts) {
  const auto frame = render_pair(slanted_ramp_scene(testing::desk_rig(320, 256), 2.0, 10.0), 0);
  MatcherConfig cfg;
  cfg.pyramid_levels = 3;
  const auto a = match(frame.pair, cfg);
  const auto b = match(frame.pair, cfg);
  cfg.num_threads = 4;
  const auto c = match(frame.pair, cfg);
  EXPECT_TRUE(a == b);
  EXPECT_TRUE(a == c);
}

TEST(Match, ProbabilitiesOfConvergedPatchesFormDistributions) {
  const auto frame = render_pair(plane_scene(testing::desk_rig(320, 256), 8.0), 0);
  MatcherConfig cfg;
  cfg.pyramid_levels = 3;
  const auto result = match_with_patches(frame.pair, cfg);
  int checked = 0;
  for (const auto& p : result.finest_patches) {
    if (!p.valid) continue;
    const auto s = scrf_probability(frame.pair.left, frame.pair.right, p.center, p.disparity, cfg);
    ASSERT_TRUE(s.valid);
    double sum = 0.0;
    for (double v : s.probabilities) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_DOUBLE_EQ(s.probability, p.scrf_probability);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

}  // namespace
}  // namespace densemap
