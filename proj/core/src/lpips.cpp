#include "geoinpaint/lpips.hpp"

namespace geoinpaint {

PerceptualLossConfig PerceptualLossConfig::tiny() {
  PerceptualLossConfig cfg;
  cfg.stage_widths = {8, 16, 16};
  cfg.convs_per_stage = {1, 1, 1};
  return cfg;
}

PerceptualLossImpl::PerceptualLossImpl(PerceptualLossConfig cfg) : cfg_(std::move(cfg)) {
  TORCH_CHECK(cfg_.stage_widths.size() == cfg_.convs_per_stage.size(),
              "perceptual loss: stage config length mismatch");

  torch::manual_seed(cfg_.init_seed);
  int in = 3;
  for (size_t s = 0; s < cfg_.stage_widths.size(); ++s) {
    torch::nn::Sequential stage;
    if (s > 0) stage->push_back(torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(2)));
    for (int c = 0; c < cfg_.convs_per_stage[s]; ++c) {
      stage->push_back(torch::nn::Conv2d(
          torch::nn::Conv2dOptions(in, cfg_.stage_widths[s], 3).padding(1)));
      stage->push_back(torch::nn::ReLU());
      in = cfg_.stage_widths[s];
    }
    stages_.push_back(register_module("stage" + std::to_string(s), stage));
    auto lin = torch::rand({cfg_.stage_widths[s]}) / cfg_.stage_widths[s];
    lins_.push_back(register_parameter("lin" + std::to_string(s), lin));
  }

  // input scaling applied after mapping [0,1] -> [-1,1]
  shift_ = register_buffer("shift", torch::tensor({-0.030f, -0.088f, -0.188f}).view({1, 3, 1, 1}));
  scale_ = register_buffer("scale", torch::tensor({0.458f, 0.448f, 0.450f}).view({1, 3, 1, 1}));

  if (!cfg_.weights_path.empty()) {
    torch::serialize::InputArchive ar;
    ar.load_from(cfg_.weights_path);
    torch::NoGradGuard ng;
    for (auto& p : named_parameters()) {
      torch::Tensor src;
      if (ar.try_read(p.key(), src) && src.sizes() == p.value().sizes()) p.value().copy_(src);
    }
  }
  for (auto& p : parameters()) p.set_requires_grad(false);
}

std::vector<torch::Tensor> PerceptualLossImpl::features(const torch::Tensor& x) {
  TORCH_CHECK(x.dim() == 4 && x.size(1) == 3, "perceptual loss expects Nx3xHxW inputs");
  auto h = ((x * 2.0 - 1.0) - shift_) / scale_;
  std::vector<torch::Tensor> taps;
  for (auto& stage : stages_) {
    h = stage->forward(h);
    taps.push_back(h);
  }
  return taps;
}

torch::Tensor PerceptualLossImpl::tap_weights(int stage) const {
  return lins_[stage].clamp_min(0.0);
}

torch::Tensor PerceptualLossImpl::forward(const torch::Tensor& a, const torch::Tensor& b) {
  TORCH_CHECK(a.sizes() == b.sizes(), "perceptual loss: shape mismatch");
  auto fa = features(a);
  auto fb = features(b);
  torch::Tensor total = torch::zeros({a.size(0)}, a.options());
  for (int s = 0; s < num_taps(); ++s) {
    auto na = fa[s] / (fa[s].norm(2, 1, true) + 1e-10);
    auto nb = fb[s] / (fb[s].norm(2, 1, true) + 1e-10);
    auto diff2 = (na - nb).pow(2);
    auto weighted = diff2 * tap_weights(s).view({1, -1, 1, 1});
    total = total + weighted.sum(1).mean({1, 2});  // channel-weighted sum, spatial mean
  }
  return total.mean();
}

}  // namespace geoinpaint
