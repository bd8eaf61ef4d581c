#include "geoinpaint/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace geoinpaint {

namespace {

torch::nn::Conv2d conv3(int in, int out, int stride = 1) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

/// ResNet basic block (two 3x3 convs, identity or projected shortcut).
struct BasicBlockImpl : torch::nn::Module {
  BasicBlockImpl(int in, int out, int stride) {
    conv1 = register_module("conv1", conv3(in, out, stride));
    bn1 = register_module("bn1", torch::nn::BatchNorm2d(out));
    conv2 = register_module("conv2", conv3(out, out));
    bn2 = register_module("bn2", torch::nn::BatchNorm2d(out));
    if (stride != 1 || in != out) {
      proj = register_module(
          "proj", torch::nn::Sequential(
                      torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 1).stride(stride)),
                      torch::nn::BatchNorm2d(out)));
    }
  }
  torch::Tensor forward(torch::Tensor x) {
    auto identity = proj ? proj->forward(x) : x;
    x = torch::relu(bn1(conv1(x)));
    x = bn2(conv2(x));
    return torch::relu(x + identity);
  }
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
  torch::nn::BatchNorm2d bn1{nullptr}, bn2{nullptr};
  torch::nn::Sequential proj{nullptr};
};
TORCH_MODULE(BasicBlock);

torch::nn::Sequential make_stage(int in, int out, int stride, int blocks) {
  torch::nn::Sequential seq;
  seq->push_back(BasicBlock(in, out, stride));
  for (int i = 1; i < blocks; ++i) seq->push_back(BasicBlock(out, out, 1));
  return seq;
}

}  // namespace

int EncoderDecoderConfig::width(int stage) const {
  return std::max(8, static_cast<int>(std::lround(stage_widths[stage] * width_multiplier)));
}

int EncoderDecoderConfig::bridge() const {
  return std::max(8, static_cast<int>(std::lround(bridge_width * width_multiplier)));
}

EncoderDecoderImpl::EncoderDecoderImpl(EncoderDecoderConfig cfg) : cfg_(std::move(cfg)) {
  int prev = cfg_.in_channels;
  for (int s = 0; s < 6; ++s) {
    int w = cfg_.width(s);
    int stride = s == 0 ? 1 : 2;  // total downsampling 32 at stage 5
    enc_.push_back(register_module("enc" + std::to_string(s + 1),
                                   make_stage(prev, w, stride, cfg_.blocks_per_stage)));
    prev = w;
  }
  bridge_ = register_module("bridge", make_stage(prev, cfg_.bridge(), 1, cfg_.blocks_per_stage));

  prev = cfg_.bridge();
  for (int s = 5; s >= 0; --s) {
    int w = cfg_.width(s);
    int in = prev + cfg_.width(s);  // concat with the symmetric encoder stage
    auto stage = torch::nn::Sequential(conv3(in, w), torch::nn::BatchNorm2d(w), torch::nn::ReLU(),
                                       conv3(w, w), torch::nn::BatchNorm2d(w), torch::nn::ReLU());
    dec_.push_back(register_module("dec" + std::to_string(s + 1), stage));
    skips_.push_back({s, s});
    prev = w;
  }
  out_conv_ = register_module(
      "out_conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(prev, cfg_.out_channels, 3).padding(1)));
}

torch::Tensor EncoderDecoderImpl::forward(const torch::Tensor& x) {
  TORCH_CHECK(x.dim() == 4 && x.size(1) == cfg_.in_channels,
              "encoder-decoder: expected NxCxHxW input with C=", cfg_.in_channels);
  TORCH_CHECK(x.size(2) % 32 == 0 && x.size(3) % 32 == 0,
              "encoder-decoder: H and W must be divisible by 32, got ", x.size(2), "x", x.size(3));

  std::vector<torch::Tensor> feats;
  torch::Tensor h = x;
  for (auto& stage : enc_) {
    h = stage->forward(h);
    feats.push_back(h);
  }
  h = bridge_->forward(h);

  namespace F = torch::nn::functional;
  for (size_t d = 0; d < dec_.size(); ++d) {
    int enc_stage = skips_[d].encoder_stage;
    h = dec_[d]->forward(torch::cat({h, feats[enc_stage]}, 1));
    if (enc_stage > 0)
      h = F::interpolate(h, F::InterpolateFuncOptions()
                                .scale_factor(std::vector<double>{2.0, 2.0})
                                .mode(torch::kBilinear)
                                .align_corners(false));
  }
  h = out_conv_(h);
  return cfg_.bounded_output ? torch::sigmoid(h) : h;
}

int EncoderDecoderImpl::load_pretrained_encoder(const std::string& path) {
  torch::serialize::InputArchive archive;
  archive.load_from(path);
  int copied = 0;
  torch::NoGradGuard ng;
  for (auto& p : named_parameters()) {
    // first three encoder stages only
    if (p.key().rfind("enc1.", 0) != 0 && p.key().rfind("enc2.", 0) != 0 &&
        p.key().rfind("enc3.", 0) != 0)
      continue;
    torch::Tensor src;
    if (archive.try_read(p.key(), src) && src.sizes() == p.value().sizes()) {
      p.value().copy_(src);
      ++copied;
    }
  }
  return copied;
}

GeneratorConfig::GeneratorConfig() {
  coarse.in_channels = 4;
  coarse.bounded_output = true;   // reconstructions live in [0,1]
  refine.in_channels = 4;         // coarse map ⊕ mask
  refine.bounded_output = false;  // residual is unbounded
}

GeneratorConfig GeneratorConfig::tiny() {
  GeneratorConfig cfg;
  cfg.coarse.width_multiplier = 0.125;
  cfg.coarse.blocks_per_stage = 1;
  cfg.refine.width_multiplier = 0.125;
  cfg.refine.blocks_per_stage = 1;
  return cfg;
}

GeneratorImpl::GeneratorImpl(GeneratorConfig cfg) : cfg_(std::move(cfg)) {
  coarse_net_ = register_module("coarse", EncoderDecoder(cfg_.coarse));
  refine_net_ = register_module("refine", EncoderDecoder(cfg_.refine));
  if (!cfg_.pretrained_encoder.empty()) {
    coarse_net_->load_pretrained_encoder(cfg_.pretrained_encoder);
    refine_net_->load_pretrained_encoder(cfg_.pretrained_encoder);
  }
}

torch::Tensor GeneratorImpl::coarse_forward(const torch::Tensor& input4) {
  return coarse_net_->forward(input4);
}

std::pair<torch::Tensor, torch::Tensor> GeneratorImpl::refine_forward(const torch::Tensor& coarse,
                                                                      const torch::Tensor& mask) {
  TORCH_CHECK(coarse.sizes().slice(2) == mask.sizes().slice(2),
              "refine_forward: coarse/mask shape mismatch");
  auto residual = refine_net_->forward(torch::cat({coarse, mask}, 1));
  return {residual, coarse + residual};
}

GeneratorOutput GeneratorImpl::forward(const torch::Tensor& input4, const torch::Tensor& mask) {
  auto coarse = coarse_forward(input4);
  auto [residual, refined] = refine_forward(coarse, mask);
  return {coarse, residual, refined};
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(PatchDiscriminatorConfig cfg) : cfg_(cfg) {
  auto w = [&](int base) {
    return std::max(4, static_cast<int>(std::lround(base * cfg_.width_multiplier)));
  };
  auto conv4 = [](int in, int out, int stride) {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 4).stride(stride).padding(1));
  };
  int in = cfg_.condition_channels + cfg_.candidate_channels;
  layers_ = torch::nn::Sequential(
      conv4(in, w(64), 2), torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)),
      conv4(w(64), w(128), 2), torch::nn::BatchNorm2d(w(128)),
      torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)),
      conv4(w(128), w(256), 2), torch::nn::BatchNorm2d(w(256)),
      torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)),
      conv4(w(256), w(512), 1), torch::nn::BatchNorm2d(w(512)),
      torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)),
      conv4(w(512), 1, 1));
  register_module("layers", layers_);
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& condition,
                                              const torch::Tensor& candidate) {
  TORCH_CHECK(condition.sizes() == candidate.sizes(),
              "discriminator: condition/candidate shape mismatch");
  return layers_->forward(torch::cat({condition, candidate}, 1));
}

torch::Tensor compose_discriminator_input(const torch::Tensor& reconstruction,
                                          const torch::Tensor& occluded,
                                          const torch::Tensor& mask) {
  TORCH_CHECK(reconstruction.sizes() == occluded.sizes(),
              "compose_discriminator_input: shape mismatch");
  TORCH_CHECK(reconstruction.size(-1) == mask.size(-1) && reconstruction.size(-2) == mask.size(-2),
              "compose_discriminator_input: mask shape mismatch");
  return reconstruction * mask + occluded * (1.0 - mask);
}

}  // namespace geoinpaint
