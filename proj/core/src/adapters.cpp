#include "geoinpaint/adapters.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace geoinpaint {

namespace {

namespace F = torch::nn::functional;

torch::nn::Conv2d conv3(int in, int out, int stride = 1) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

/// Tiny classifier trainable in seconds; the test stand-in for VGG16.
struct StubClassifierImpl : torch::nn::Module {
  StubClassifierImpl(int num_classes) {
    conv1 = register_module("conv1", conv3(3, 16, 2));
    conv2 = register_module("conv2", conv3(16, 32, 2));
    fc = register_module("fc", torch::nn::Linear(32, num_classes));
  }
  torch::Tensor forward(const torch::Tensor& x) {
    auto h = torch::relu(conv1(x));
    h = torch::relu(conv2(h));
    h = F::adaptive_avg_pool2d(h, F::AdaptiveAvgPool2dFuncOptions(1)).flatten(1);
    return fc(h);
  }
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
  torch::nn::Linear fc{nullptr};
};
TORCH_MODULE(StubClassifier);

/// VGG16 topology for externally supplied classification weights.
struct Vgg16ClassifierImpl : torch::nn::Module {
  Vgg16ClassifierImpl(int num_classes) {
    const std::vector<std::vector<int>> stages = {{64, 64}, {128, 128}, {256, 256, 256},
                                                  {512, 512, 512}, {512, 512, 512}};
    int in = 3, idx = 0;
    for (const auto& stage : stages) {
      for (int w : stage) {
        features->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, w, 3).padding(1)));
        features->push_back(torch::nn::ReLU());
        in = w;
        ++idx;
      }
      features->push_back(torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(2)));
    }
    register_module("features", features);
    classifier = register_module(
        "classifier", torch::nn::Sequential(torch::nn::Linear(512 * 7 * 7, 4096), torch::nn::ReLU(),
                                            torch::nn::Linear(4096, 4096), torch::nn::ReLU(),
                                            torch::nn::Linear(4096, num_classes)));
  }
  torch::Tensor forward(const torch::Tensor& x) {
    auto h = features->forward(x);
    h = F::adaptive_avg_pool2d(h, F::AdaptiveAvgPool2dFuncOptions(7)).flatten(1);
    return classifier->forward(h);
  }
  torch::nn::Sequential features, classifier{nullptr};
};
TORCH_MODULE(Vgg16Classifier);

/// Part-based retrieval network: conv backbone producing a feature map,
/// square-ring partition into P parts, per-part identity classifiers.
struct GeoPartNetImpl : torch::nn::Module {
  GeoPartNetImpl(int num_identities, int parts, int feat_channels = 32) : parts_(parts) {
    backbone = register_module(
        "backbone",
        torch::nn::Sequential(conv3(3, 16, 2), torch::nn::ReLU(), conv3(16, feat_channels, 2),
                              torch::nn::ReLU()));
    for (int p = 0; p < parts; ++p)
      part_fcs->push_back(torch::nn::Linear(feat_channels, num_identities));
    register_module("part_fcs", part_fcs);
  }

  torch::Tensor feature_map(const torch::Tensor& x) { return backbone->forward(x); }

  /// Mean feature of square ring `p` out of `parts_` concentric boxes.
  torch::Tensor part_feature(const torch::Tensor& fmap, int p) const {
    int h = static_cast<int>(fmap.size(2)), w = static_cast<int>(fmap.size(3));
    auto box = [&](int k) {
      // centered box covering fraction k/parts of each side (k=parts -> full map)
      int bh = std::max(1, (h * k + parts_ - 1) / parts_);
      int bw = std::max(1, (w * k + parts_ - 1) / parts_);
      int r0 = (h - bh) / 2, c0 = (w - bw) / 2;
      return std::array<int, 4>{r0, r0 + bh, c0, c0 + bw};
    };
    auto outer = box(p + 1);
    auto region = fmap.index({torch::indexing::Slice(), torch::indexing::Slice(),
                              torch::indexing::Slice(outer[0], outer[1]),
                              torch::indexing::Slice(outer[2], outer[3])});
    auto sum = region.sum({2, 3});
    double count = static_cast<double>(outer[1] - outer[0]) * (outer[3] - outer[2]);
    if (p > 0) {
      auto inner = box(p);
      auto inner_region = fmap.index({torch::indexing::Slice(), torch::indexing::Slice(),
                                      torch::indexing::Slice(inner[0], inner[1]),
                                      torch::indexing::Slice(inner[2], inner[3])});
      sum = sum - inner_region.sum({2, 3});
      count -= static_cast<double>(inner[1] - inner[0]) * (inner[3] - inner[2]);
    }
    TORCH_CHECK(count > 0, "geolocation part ", p, " has an empty ring; feature map too small");
    return sum / count;
  }

  std::vector<torch::Tensor> part_logits(const torch::Tensor& x) {
    auto fmap = feature_map(x);
    std::vector<torch::Tensor> out;
    for (int p = 0; p < parts_; ++p)
      out.push_back(part_fcs->at<torch::nn::LinearImpl>(p).forward(part_feature(fmap, p)));
    return out;
  }

  int parts_;
  torch::nn::Sequential backbone{nullptr};
  torch::nn::ModuleList part_fcs;
};
TORCH_MODULE(GeoPartNet);

struct StubSegmenterImpl : torch::nn::Module {
  StubSegmenterImpl(int num_classes) {
    conv1 = register_module("conv1", conv3(3, 16));
    conv2 = register_module("conv2", conv3(16, num_classes));
  }
  torch::Tensor forward(const torch::Tensor& x) { return conv2(torch::relu(conv1(x))); }
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
};
TORCH_MODULE(StubSegmenter);

/// FCN-style segmenter for externally supplied weights.
struct FcnSegmenterImpl : torch::nn::Module {
  FcnSegmenterImpl(int num_classes) {
    body = register_module(
        "body", torch::nn::Sequential(conv3(3, 32, 2), torch::nn::ReLU(), conv3(32, 64, 2),
                                      torch::nn::ReLU(), conv3(64, 64), torch::nn::ReLU()));
    head = register_module("head", conv3(64, num_classes));
  }
  torch::Tensor forward(const torch::Tensor& x) {
    auto h = head(body->forward(x));
    return F::interpolate(h, F::InterpolateFuncOptions()
                                 .size(std::vector<int64_t>{x.size(2), x.size(3)})
                                 .mode(torch::kBilinear)
                                 .align_corners(false));
  }
  torch::nn::Sequential body{nullptr};
  torch::nn::Conv2d head{nullptr};
};
TORCH_MODULE(FcnSegmenter);

}  // namespace

TaskAdapter::TaskAdapter(AdapterConfig cfg) : cfg_(std::move(cfg)) {
  torch::manual_seed(cfg_.init_seed);
  switch (cfg_.kind) {
    case TaskKind::classification:
      if (cfg_.arch == "vgg16")
        net_ = Vgg16Classifier(cfg_.num_classes).ptr();
      else
        net_ = StubClassifier(cfg_.num_classes).ptr();
      break;
    case TaskKind::test_stub:
      net_ = StubClassifier(cfg_.num_classes).ptr();
      break;
    case TaskKind::geolocation:
      net_ = GeoPartNet(cfg_.num_identities, cfg_.parts).ptr();
      break;
    case TaskKind::segmentation:
      if (cfg_.arch == "fcn")
        net_ = FcnSegmenter(cfg_.num_classes).ptr();
      else
        net_ = StubSegmenter(cfg_.num_classes).ptr();
      break;
  }
  if (!cfg_.weights_path.empty()) load_weights(cfg_.weights_path);
  net_->eval();
  set_trainable(false);
}

torch::Tensor TaskAdapter::normalize(const torch::Tensor& images) const {
  auto mean = torch::tensor({static_cast<float>(cfg_.norm_mean[0]),
                             static_cast<float>(cfg_.norm_mean[1]),
                             static_cast<float>(cfg_.norm_mean[2])})
                  .view({1, 3, 1, 1});
  auto std = torch::tensor({static_cast<float>(cfg_.norm_std[0]),
                            static_cast<float>(cfg_.norm_std[1]),
                            static_cast<float>(cfg_.norm_std[2])})
                 .view({1, 3, 1, 1});
  return (images - mean) / std;
}

torch::Tensor TaskAdapter::logits(const torch::Tensor& images) {
  auto x = normalize(images);
  if (auto* stub = net_->as<StubClassifierImpl>()) return stub->forward(x);
  if (auto* vgg = net_->as<Vgg16ClassifierImpl>()) return vgg->forward(x);
  throw std::logic_error("logits: adapter kind has no classifier head");
}

torch::Tensor TaskAdapter::classification_loss(const torch::Tensor& images,
                                               const torch::Tensor& class_ids) {
  TORCH_CHECK(cfg_.kind == TaskKind::classification || cfg_.kind == TaskKind::test_stub,
              "classification_loss: wrong adapter kind");
  TORCH_CHECK(class_ids.min().item<int64_t>() >= 0 &&
                  class_ids.max().item<int64_t>() < cfg_.num_classes,
              "classification_loss: class id out of range");
  return F::cross_entropy(logits(images), class_ids);
}

torch::Tensor TaskAdapter::geolocation_loss(const torch::Tensor& street,
                                            const torch::Tensor& satellite,
                                            const torch::Tensor& identities) {
  TORCH_CHECK(cfg_.kind == TaskKind::geolocation, "geolocation_loss: wrong adapter kind");
  TORCH_CHECK(satellite.defined() && satellite.numel() > 0,
              "geolocation_loss: missing paired satellite view");
  auto* net = net_->as<GeoPartNetImpl>();
  auto parts = net->part_logits(normalize(street));
  torch::Tensor loss = torch::zeros({}, street.options());
  for (auto& p : parts) loss = loss + F::cross_entropy(p, identities);
  return loss;
}

torch::Tensor TaskAdapter::segmentation_loss(const torch::Tensor& images,
                                             const torch::Tensor& class_maps) {
  TORCH_CHECK(cfg_.kind == TaskKind::segmentation, "segmentation_loss: wrong adapter kind");
  TORCH_CHECK(images.size(-1) == class_maps.size(-1) && images.size(-2) == class_maps.size(-2),
              "segmentation_loss: size mismatch");
  torch::Tensor logits;
  if (auto* stub = net_->as<StubSegmenterImpl>())
    logits = stub->forward(normalize(images));
  else
    logits = net_->as<FcnSegmenterImpl>()->forward(normalize(images));
  return F::cross_entropy(logits, class_maps,
                          F::CrossEntropyFuncOptions().ignore_index(cfg_.ignore_index));
}

torch::Tensor TaskAdapter::task_loss(const torch::Tensor& images, const Batch& batch) {
  switch (cfg_.kind) {
    case TaskKind::classification:
    case TaskKind::test_stub:
      return classification_loss(images, batch.class_ids);
    case TaskKind::geolocation:
      return geolocation_loss(images, batch.satellites, batch.identities);
    case TaskKind::segmentation:
      return segmentation_loss(images, batch.class_maps);
  }
  throw std::logic_error("task_loss: unknown kind");
}

torch::Tensor TaskAdapter::embed(const torch::Tensor& images) {
  TORCH_CHECK(cfg_.kind == TaskKind::geolocation, "embed: geolocation adapters only");
  auto* net = net_->as<GeoPartNetImpl>();
  auto fmap = net->feature_map(normalize(images));
  std::vector<torch::Tensor> feats;
  for (int p = 0; p < net->parts_; ++p) feats.push_back(net->part_feature(fmap, p));
  auto e = torch::cat(feats, 1);
  return e / (e.norm(2, 1, true) + 1e-12);
}

torch::Tensor TaskAdapter::predict_map(const torch::Tensor& images) {
  TORCH_CHECK(cfg_.kind == TaskKind::segmentation, "predict_map: segmentation adapters only");
  torch::NoGradGuard ng;
  torch::Tensor logits;
  if (auto* stub = net_->as<StubSegmenterImpl>())
    logits = stub->forward(normalize(images));
  else
    logits = net_->as<FcnSegmenterImpl>()->forward(normalize(images));
  return logits.argmax(1);
}

void TaskAdapter::save_weights(const std::string& path) {
  torch::serialize::OutputArchive ar;
  for (const auto& p : net_->named_parameters()) ar.write(p.key(), p.value());
  for (const auto& b : net_->named_buffers()) ar.write(b.key(), b.value());
  ar.save_to(path);
}

void TaskAdapter::load_weights(const std::string& path) {
  torch::serialize::InputArchive ar;
  ar.load_from(path);
  torch::NoGradGuard ng;
  for (auto& p : net_->named_parameters()) {
    torch::Tensor src;
    if (ar.try_read(p.key(), src)) p.value().copy_(src);
  }
  for (auto& b : net_->named_buffers()) {
    torch::Tensor src;
    if (ar.try_read(b.key(), src)) b.value().copy_(src);
  }
}

void TaskAdapter::set_trainable(bool trainable) {
  for (auto& p : net_->parameters()) p.set_requires_grad(trainable);
}

std::vector<torch::Tensor> TaskAdapter::parameters() const { return net_->parameters(); }

std::uint64_t freeze_check(const TaskAdapter& adapter) {
  // Parameters sorted by name so the digest is load-order independent.
  std::map<std::string, torch::Tensor> named;
  for (const auto& p :
       const_cast<TaskAdapter&>(adapter).network().named_parameters())
    named[p.key()] = p.value();

  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const void* data, size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& [name, t] : named) {
    mix(name.data(), name.size());
    auto c = t.detach().contiguous();
    mix(c.data_ptr(), c.numel() * c.element_size());
  }
  return h;
}

double train_stub_adapter(TaskAdapter& adapter, const Batch& clean_batch, int steps, double lr) {
  TORCH_CHECK(adapter.kind() == TaskKind::test_stub || adapter.kind() == TaskKind::classification,
              "train_stub_adapter supports classifier stubs only");
  adapter.set_trainable(true);
  torch::optim::Adam opt(adapter.parameters(), torch::optim::AdamOptions(lr));
  double loss_val = 0;
  for (int i = 0; i < steps; ++i) {
    opt.zero_grad();
    auto loss = adapter.classification_loss(clean_batch.clean, clean_batch.class_ids);
    loss.backward();
    opt.step();
    loss_val = loss.item<double>();
  }
  adapter.set_trainable(false);
  return loss_val;
}

}  // namespace geoinpaint
