#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace geoinpaint {

/// VGG16-style feature extractor with per-layer linear weights, computing a
/// learned perceptual distance: unit-normalized activations at each tap,
/// squared difference, nonnegative channel weighting, spatial average,
/// summed over taps. Zero on identical inputs and symmetric by construction.
struct PerceptualLossConfig {
  std::vector<int> stage_widths = {64, 128, 256, 512, 512};
  std::vector<int> convs_per_stage = {2, 2, 3, 3, 3};  // VGG16 layout
  std::string weights_path;   // optional pretrained extractor + linear weights
  std::uint64_t init_seed = 1234;  // deterministic random init when no weights

  static PerceptualLossConfig tiny();
};

class PerceptualLossImpl : public torch::nn::Module {
 public:
  explicit PerceptualLossImpl(PerceptualLossConfig cfg = {});

  /// Mean perceptual distance over the batch; inputs Nx3xHxW in [0,1].
  torch::Tensor forward(const torch::Tensor& a, const torch::Tensor& b);

  /// Tapped activations for one input (pre-normalization), one per stage.
  std::vector<torch::Tensor> features(const torch::Tensor& x);

  /// Nonnegative per-channel weights of one tap (as used by forward).
  torch::Tensor tap_weights(int stage) const;

  int num_taps() const { return static_cast<int>(cfg_.stage_widths.size()); }

 private:
  PerceptualLossConfig cfg_;
  std::vector<torch::nn::Sequential> stages_;
  std::vector<torch::Tensor> lins_;
  torch::Tensor shift_, scale_;
};
TORCH_MODULE(PerceptualLoss);

}  // namespace geoinpaint
