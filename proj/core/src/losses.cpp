#include "geoinpaint/losses.hpp"

namespace geoinpaint {

namespace {

torch::Tensor bce_logits(const torch::Tensor& logits, double target) {
  auto t = torch::full_like(logits, target);
  return torch::binary_cross_entropy_with_logits(logits, t);
}

}  // namespace

torch::Tensor l1_loss(const torch::Tensor& reconstruction, const torch::Tensor& target) {
  TORCH_CHECK(reconstruction.sizes() == target.sizes(), "l1_loss: shape mismatch");
  return (reconstruction - target).abs().mean();
}

AdversarialTerms adversarial_losses(PatchDiscriminator& disc_coarse,
                                    PatchDiscriminator& disc_refined,
                                    const torch::Tensor& occluded,
                                    const torch::Tensor& ground_truth,
                                    const torch::Tensor& fake_coarse,
                                    const torch::Tensor& fake_refined) {
  AdversarialTerms terms;
  // Discriminator side: fakes detached so no gradient reaches the generator.
  terms.disc_coarse = bce_logits(disc_coarse->forward(occluded, ground_truth), 1.0) +
                      bce_logits(disc_coarse->forward(occluded, fake_coarse.detach()), 0.0);
  terms.disc_refined = bce_logits(disc_refined->forward(occluded, ground_truth), 1.0) +
                       bce_logits(disc_refined->forward(occluded, fake_refined.detach()), 0.0);
  // Generator side: non-saturating surrogate (push fakes toward "real").
  terms.generator = bce_logits(disc_coarse->forward(occluded, fake_coarse), 1.0) +
                    bce_logits(disc_refined->forward(occluded, fake_refined), 1.0);
  return terms;
}

double gan_minimax_value(const torch::Tensor& dc_real_prob, const torch::Tensor& dc_fake_prob,
                         const torch::Tensor& dr_real_prob, const torch::Tensor& dr_fake_prob) {
  auto term = [](const torch::Tensor& p) { return p.log().mean().item<double>(); };
  auto comp = [](const torch::Tensor& p) { return (1.0 - p).log().mean().item<double>(); };
  return term(dc_real_prob) + comp(dc_fake_prob) + term(dr_real_prob) + comp(dr_fake_prob);
}

LossBreakdown overall_loss(const LossComponents& parts, const LossWeights& weights) {
  LossBreakdown b;
  b.l1_coarse = parts.l1_coarse;
  b.l1_refined = parts.l1_refined;
  b.perceptual_refined = parts.perceptual_refined;
  b.gan_generator = parts.gan_generator;
  b.gan_discriminator_coarse = parts.gan_discriminator_coarse;
  b.gan_discriminator_refined = parts.gan_discriminator_refined;
  b.task = parts.task;
  b.total = (parts.l1_coarse + parts.l1_refined) + parts.perceptual_refined +
            parts.gan_generator + weights.lambda_task * parts.task;
  return b;
}

}  // namespace geoinpaint
