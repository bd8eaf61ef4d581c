#pragma once

#include <array>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace geoinpaint {

/// Encoder-decoder template shared by the coarse and refinement networks.
/// Six encoder stages (ResNet-34-style widths) plus a bridge; the decoder
/// mirrors the encoder with one skip connection per symmetric stage pair.
struct EncoderDecoderConfig {
  int in_channels = 4;
  int out_channels = 3;
  std::array<int, 6> stage_widths = {64, 64, 128, 256, 512, 512};
  int bridge_width = 512;
  int blocks_per_stage = 2;
  double width_multiplier = 1.0;  // test configs shrink widths
  bool bounded_output = false;    // sigmoid on the output head

  int width(int stage) const;
  int bridge() const;
};

struct SkipLink {
  int encoder_stage;
  int decoder_stage;
};

class EncoderDecoderImpl : public torch::nn::Module {
 public:
  explicit EncoderDecoderImpl(EncoderDecoderConfig cfg);

  /// Input NxCxHxW with H, W divisible by 32; output keeps H, W.
  torch::Tensor forward(const torch::Tensor& x);

  const std::vector<SkipLink>& skip_links() const { return skips_; }
  torch::nn::Conv2d output_head() { return out_conv_; }
  const EncoderDecoderConfig& config() const { return cfg_; }

  /// Copies matching parameters of the first three encoder stages from a
  /// named-tensor archive (e.g. converted ImageNet weights). Returns the
  /// number of tensors copied.
  int load_pretrained_encoder(const std::string& path);

 private:
  EncoderDecoderConfig cfg_;
  std::vector<torch::nn::Sequential> enc_, dec_;
  torch::nn::Sequential bridge_{nullptr};
  torch::nn::Conv2d out_conv_{nullptr};
  std::vector<SkipLink> skips_;
};
TORCH_MODULE(EncoderDecoder);

/// Coarse map, additive residual and their sum (pre-clamp).
struct GeneratorOutput {
  torch::Tensor coarse;
  torch::Tensor residual;
  torch::Tensor refined;
};

struct GeneratorConfig {
  EncoderDecoderConfig coarse;
  EncoderDecoderConfig refine;
  std::string pretrained_encoder;  // optional weight archive for both encoders

  GeneratorConfig();
  static GeneratorConfig tiny();  // small widths for tests
};

class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(GeneratorConfig cfg);

  torch::Tensor coarse_forward(const torch::Tensor& input4);
  std::pair<torch::Tensor, torch::Tensor> refine_forward(const torch::Tensor& coarse,
                                                         const torch::Tensor& mask);
  GeneratorOutput forward(const torch::Tensor& input4, const torch::Tensor& mask);

  EncoderDecoder coarse_net() { return coarse_net_; }
  EncoderDecoder refine_net() { return refine_net_; }
  const GeneratorConfig& config() const { return cfg_; }

 private:
  GeneratorConfig cfg_;
  EncoderDecoder coarse_net_{nullptr}, refine_net_{nullptr};
};
TORCH_MODULE(Generator);

/// 70x70-receptive-field patch discriminator, conditioned on the occluded
/// input (3 condition + 3 candidate channels). Emits a grid of logits.
struct PatchDiscriminatorConfig {
  int condition_channels = 3;
  int candidate_channels = 3;
  double width_multiplier = 1.0;
};

class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit PatchDiscriminatorImpl(PatchDiscriminatorConfig cfg = {});
  torch::Tensor forward(const torch::Tensor& condition, const torch::Tensor& candidate);

 private:
  PatchDiscriminatorConfig cfg_;
  torch::nn::Sequential layers_{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

/// D_input = R ⊙ M + I ⊙ (1-M): reconstruction inside the hole, the
/// untouched input elsewhere.
torch::Tensor compose_discriminator_input(const torch::Tensor& reconstruction,
                                          const torch::Tensor& occluded,
                                          const torch::Tensor& mask);

}  // namespace geoinpaint
