#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

namespace geoinpaint {

/// Binary occlusion mask, row-major, 1 = occluded pixel.
struct OcclusionMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> grid;

  OcclusionMask() = default;
  OcclusionMask(int h, int w) : height(h), width(w), grid(static_cast<size_t>(h) * w, 0) {}

  std::uint8_t& at(int r, int c) { return grid[static_cast<size_t>(r) * width + c]; }
  std::uint8_t at(int r, int c) const { return grid[static_cast<size_t>(r) * width + c]; }

  bool operator==(const OcclusionMask& other) const = default;
};

enum class AugmentKind { translate, shear, rotate };

/// One geometric augmentation: translate (dx, dy in pixels), shear
/// (shear_x, shear_y unitless) or rotate (angle in degrees, CCW).
struct AugmentOp {
  AugmentKind kind = AugmentKind::translate;
  double p0 = 0.0;
  double p1 = 0.0;

  static AugmentOp translate(double dx, double dy) { return {AugmentKind::translate, dx, dy}; }
  static AugmentOp shear(double sx, double sy) { return {AugmentKind::shear, sx, sy}; }
  static AugmentOp rotate(double deg) { return {AugmentKind::rotate, deg, 0.0}; }
  static AugmentOp identity() { return translate(0.0, 0.0); }
};

/// Sampling ranges for randomly drawn augmentation parameters.
struct OpRanges {
  double max_translate_frac = 0.25;  // fraction of the image side
  double max_shear = 0.3;
  double max_rotate_deg = 45.0;
};

/// Configuration of the three-branch mask mixing augmentation.
/// Each of the 3 branches chains 3 randomly drawn ops; the branch outputs
/// plus the seed are blended with random weights and re-thresholded.
struct MixConfig {
  static constexpr int kBranchCount = 3;
  static constexpr int kChainDepth = 3;
  double threshold = 0.5;
  OpRanges ranges;
  std::uint64_t rng_seed = 0;
};

/// Area-ratio constraint for synthesized occlusions.
struct OcclusionSpec {
  double area_lo = 0.15;
  double area_hi = 0.60;
};

using Rng = std::mt19937_64;

using BranchChains =
    std::array<std::array<AugmentOp, MixConfig::kChainDepth>, MixConfig::kBranchCount>;
// weights[0..2] scale the branches, weights[3] scales the seed itself.
using MixWeights = std::array<double, 4>;

/// Applies a single geometric op with nearest-neighbor sampling.
/// Out-of-frame regions fill with 0; output stays binary and keeps dimensions.
OcclusionMask apply_op(const OcclusionMask& mask, const AugmentOp& op);

/// General affine warp (2x3 row-major forward matrix, pixel coordinates).
OcclusionMask apply_affine(const OcclusionMask& mask, const std::array<double, 6>& fwd);

/// Deterministic mixing core: threshold(w4 * seed + sum_i w_i * chain_i(seed)).
OcclusionMask mix_mask(const OcclusionMask& seed, const BranchChains& chains,
                       const MixWeights& weights, double threshold);

/// Randomized mask mixing. Deterministic given the rng state.
/// Throws std::invalid_argument on an all-zero seed.
OcclusionMask maskmix(const OcclusionMask& seed, const MixConfig& cfg, Rng& rng);

/// Number of maskmix invocations since process start (instrumentation).
std::uint64_t maskmix_invocation_count();

/// Fraction of occluded pixels.
double area_ratio(const OcclusionMask& mask);

/// Draws a seed from the pool, randomly rotates/translates/resizes it onto an
/// out_h x out_w canvas, retrying until the area ratio lands inside the spec.
/// Throws std::runtime_error after 50 failed attempts.
OcclusionMask sample_mask(const std::vector<OcclusionMask>& seed_pool, const OcclusionSpec& spec,
                          int out_h, int out_w, Rng& rng);

/// Nearest-neighbor resize.
OcclusionMask resize_mask(const OcclusionMask& mask, int out_h, int out_w);

}  // namespace geoinpaint
