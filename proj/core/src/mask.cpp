#include "geoinpaint/mask.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace geoinpaint {

namespace {

std::atomic<std::uint64_t> g_maskmix_calls{0};

// 2x3 row-major affine on (x, y) column vectors.
using Affine = std::array<double, 6>;

Affine compose(const Affine& a, const Affine& b) {
  // (a ∘ b)(p) = a(b(p))
  return {a[0] * b[0] + a[1] * b[3], a[0] * b[1] + a[1] * b[4], a[0] * b[2] + a[1] * b[5] + a[2],
          a[3] * b[0] + a[4] * b[3], a[3] * b[1] + a[4] * b[4], a[3] * b[2] + a[4] * b[5] + a[5]};
}

Affine invert(const Affine& m) {
  double det = m[0] * m[4] - m[1] * m[3];
  if (std::abs(det) < 1e-12) throw std::invalid_argument("apply_affine: singular transform");
  double ia = m[4] / det, ib = -m[1] / det, ic = -m[3] / det, id = m[0] / det;
  return {ia, ib, -(ia * m[2] + ib * m[5]), ic, id, -(ic * m[2] + id * m[5])};
}

Affine about_center(double a, double b, double c, double d, double cx, double cy) {
  // linear part applied around the image center
  return {a, b, cx - a * cx - b * cy, c, d, cy - c * cx - d * cy};
}

Affine op_to_affine(const AugmentOp& op, int h, int w) {
  double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  switch (op.kind) {
    case AugmentKind::translate:
      return {1, 0, op.p0, 0, 1, op.p1};
    case AugmentKind::shear:
      return about_center(1, op.p0, op.p1, 1, cx, cy);
    case AugmentKind::rotate: {
      double rad = op.p0 * std::numbers::pi / 180.0;
      double c = std::cos(rad), s = std::sin(rad);
      // CCW in image coordinates (y grows downward)
      return about_center(c, s, -s, c, cx, cy);
    }
  }
  throw std::invalid_argument("apply_op: unknown op kind");
}

Affine scale_about_center(double s, int h, int w) {
  double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  return about_center(s, 0, 0, s, cx, cy);
}

}  // namespace

OcclusionMask apply_affine(const OcclusionMask& mask, const Affine& fwd) {
  Affine inv = invert(fwd);
  OcclusionMask out(mask.height, mask.width);
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) {
      double sx = inv[0] * c + inv[1] * r + inv[2];
      double sy = inv[3] * c + inv[4] * r + inv[5];
      long ic = std::lround(sx), ir = std::lround(sy);
      if (ir >= 0 && ir < mask.height && ic >= 0 && ic < mask.width)
        out.at(r, c) = mask.at(static_cast<int>(ir), static_cast<int>(ic));
    }
  }
  return out;
}

OcclusionMask apply_op(const OcclusionMask& mask, const AugmentOp& op) {
  return apply_affine(mask, op_to_affine(op, mask.height, mask.width));
}

OcclusionMask mix_mask(const OcclusionMask& seed, const BranchChains& chains,
                       const MixWeights& weights, double threshold) {
  std::vector<double> acc(seed.grid.size(), 0.0);
  for (size_t i = 0; i < seed.grid.size(); ++i) acc[i] = weights[3] * seed.grid[i];
  for (int b = 0; b < MixConfig::kBranchCount; ++b) {
    if (weights[b] == 0.0) continue;
    OcclusionMask m = seed;
    for (const AugmentOp& op : chains[b]) m = apply_op(m, op);
    for (size_t i = 0; i < m.grid.size(); ++i) acc[i] += weights[b] * m.grid[i];
  }
  OcclusionMask out(seed.height, seed.width);
  for (size_t i = 0; i < acc.size(); ++i) out.grid[i] = acc[i] > threshold ? 1 : 0;
  return out;
}

OcclusionMask maskmix(const OcclusionMask& seed, const MixConfig& cfg, Rng& rng) {
  g_maskmix_calls.fetch_add(1, std::memory_order_relaxed);
  double area = area_ratio(seed);
  if (area == 0.0) throw std::invalid_argument("maskmix: all-zero seed mask");

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> kind_dist(0, 2);

  auto sample_op = [&]() -> AugmentOp {
    int side = std::max(seed.height, seed.width);
    switch (kind_dist(rng)) {
      case 0: {
        double lim = cfg.ranges.max_translate_frac * side;
        std::uniform_real_distribution<double> d(-lim, lim);
        return AugmentOp::translate(d(rng), d(rng));
      }
      case 1: {
        std::uniform_real_distribution<double> d(-cfg.ranges.max_shear, cfg.ranges.max_shear);
        return AugmentOp::shear(d(rng), d(rng));
      }
      default: {
        std::uniform_real_distribution<double> d(-cfg.ranges.max_rotate_deg,
                                                 cfg.ranges.max_rotate_deg);
        return AugmentOp::rotate(d(rng));
      }
    }
  };

  BranchChains chains;
  for (auto& chain : chains)
    for (auto& op : chain) op = sample_op();

  // Branch weights: m * Dirichlet(1,1,1); seed keeps 1 - m, m ~ U(0,1).
  double m = unit(rng);
  std::exponential_distribution<double> expo(1.0);
  std::array<double, 3> e{expo(rng), expo(rng), expo(rng)};
  double esum = e[0] + e[1] + e[2];
  MixWeights w{m * e[0] / esum, m * e[1] / esum, m * e[2] / esum, 1.0 - m};

  return mix_mask(seed, chains, w, cfg.threshold);
}

std::uint64_t maskmix_invocation_count() { return g_maskmix_calls.load(std::memory_order_relaxed); }

double area_ratio(const OcclusionMask& mask) {
  if (mask.grid.empty()) return 0.0;
  std::uint64_t ones = 0;
  for (std::uint8_t v : mask.grid) ones += v;
  return static_cast<double>(ones) / static_cast<double>(mask.grid.size());
}

OcclusionMask resize_mask(const OcclusionMask& mask, int out_h, int out_w) {
  OcclusionMask out(out_h, out_w);
  for (int r = 0; r < out_h; ++r) {
    int sr = std::min(mask.height - 1, static_cast<int>(static_cast<double>(r) * mask.height / out_h));
    for (int c = 0; c < out_w; ++c) {
      int sc = std::min(mask.width - 1, static_cast<int>(static_cast<double>(c) * mask.width / out_w));
      out.at(r, c) = mask.at(sr, sc);
    }
  }
  return out;
}

OcclusionMask sample_mask(const std::vector<OcclusionMask>& seed_pool, const OcclusionSpec& spec,
                          int out_h, int out_w, Rng& rng) {
  if (seed_pool.empty()) throw std::invalid_argument("sample_mask: empty seed pool");
  if (!(spec.area_lo > 0.0 && spec.area_lo <= spec.area_hi && spec.area_hi < 1.0))
    throw std::invalid_argument("sample_mask: invalid occlusion spec");

  constexpr int kMaxAttempts = 50;
  std::uniform_int_distribution<size_t> pick(0, seed_pool.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const OcclusionMask& seed = seed_pool[pick(rng)];
    OcclusionMask canvas = resize_mask(seed, out_h, out_w);
    double base_area = area_ratio(canvas);
    if (base_area == 0.0) continue;

    // Scale toward a target area inside the spec, then rotate and translate.
    double target = spec.area_lo + unit(rng) * (spec.area_hi - spec.area_lo);
    double scale = std::clamp(std::sqrt(target / base_area), 0.3, 3.0);
    double angle = unit(rng) * 360.0 - 180.0;
    double max_shift = 0.25 * std::max(out_h, out_w);
    double dx = (unit(rng) * 2 - 1) * max_shift;
    double dy = (unit(rng) * 2 - 1) * max_shift;

    Affine t = compose({1, 0, dx, 0, 1, dy},
                       compose(op_to_affine(AugmentOp::rotate(angle), out_h, out_w),
                               scale_about_center(scale, out_h, out_w)));
    OcclusionMask candidate = apply_affine(canvas, t);
    double a = area_ratio(candidate);
    if (a >= spec.area_lo && a <= spec.area_hi) return candidate;
  }
  throw std::runtime_error("sample_mask: no transform satisfied the area constraint");
}

}  // namespace geoinpaint
