#pragma once

#include <torch/torch.h>

#include "geoinpaint/model.hpp"

namespace geoinpaint {

struct LossWeights {
  double lambda_task = 5.0;  // balances image quality against task performance
};

/// Per-step scalar record; `total` follows the overall composition
/// (coarse L1 + refined L1 + perceptual + generator adversarial + λ·task).
struct LossBreakdown {
  double l1_coarse = 0;
  double l1_refined = 0;
  double perceptual_refined = 0;
  double gan_generator = 0;
  double gan_discriminator_coarse = 0;
  double gan_discriminator_refined = 0;
  double task = 0;
  double total = 0;
};

struct LossComponents {
  double l1_coarse = 0;
  double l1_refined = 0;
  double perceptual_refined = 0;
  double gan_generator = 0;
  double gan_discriminator_coarse = 0;
  double gan_discriminator_refined = 0;
  double task = 0;
};

/// Mean absolute difference over all elements.
torch::Tensor l1_loss(const torch::Tensor& reconstruction, const torch::Tensor& target);

struct AdversarialTerms {
  torch::Tensor generator;    // non-saturating surrogate, both discriminators
  torch::Tensor disc_coarse;  // BCE real/fake for D_c (fakes detached)
  torch::Tensor disc_refined; // BCE real/fake for D_r (fakes detached)
};

/// Binary-cross-entropy instantiation of the two-discriminator adversarial
/// objective. `fake_coarse`/`fake_refined` are hole-composed reconstructions.
AdversarialTerms adversarial_losses(PatchDiscriminator& disc_coarse,
                                    PatchDiscriminator& disc_refined,
                                    const torch::Tensor& occluded,
                                    const torch::Tensor& ground_truth,
                                    const torch::Tensor& fake_coarse,
                                    const torch::Tensor& fake_refined);

/// Definitional minimax value log D_c(real) + log(1-D_c(fake)) + log D_r(real)
/// + log(1-D_r(fake)) from probability grids, averaged per grid.
double gan_minimax_value(const torch::Tensor& dc_real_prob, const torch::Tensor& dc_fake_prob,
                         const torch::Tensor& dr_real_prob, const torch::Tensor& dr_fake_prob);

/// Composes the scalar breakdown; the coarse stage contributes only L1 and
/// its discriminator term, everything else attaches to the refined map.
LossBreakdown overall_loss(const LossComponents& parts, const LossWeights& weights);

}  // namespace geoinpaint
