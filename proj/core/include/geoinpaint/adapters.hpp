#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>

#include <torch/torch.h>

#include "geoinpaint/data.hpp"

namespace geoinpaint {

/// Configuration of a frozen downstream task network.
struct AdapterConfig {
  TaskKind kind = TaskKind::test_stub;
  std::string weights_path;  // externally supplied frozen weights (optional)
  int num_classes = 7;
  int num_identities = 8;    // geolocation
  int parts = 4;             // square-ring parts of the geolocation head
  int ignore_index = 255;    // segmentation
  std::array<double, 3> norm_mean = {0.0, 0.0, 0.0};
  std::array<double, 3> norm_std = {1.0, 1.0, 1.0};
  std::string arch = "stub";  // "stub" | "vgg16" (classification) | "fcn" (segmentation)
  std::uint64_t init_seed = 7;
};

/// Frozen task network plus loss head. Parameters never receive gradients;
/// the task loss is differentiable w.r.t. the input image only. Only used
/// during training; inference-time inpainting never loads one.
class TaskAdapter {
 public:
  explicit TaskAdapter(AdapterConfig cfg);

  TaskKind kind() const { return cfg_.kind; }
  const AdapterConfig& config() const { return cfg_; }

  /// Cross-entropy of the frozen classifier. images Nx3xHxW, class_ids N long.
  torch::Tensor classification_loss(const torch::Tensor& images, const torch::Tensor& class_ids);

  /// Per-part cross-entropy summed over the square-ring parts of the street
  /// view; the paired satellite view must be present.
  torch::Tensor geolocation_loss(const torch::Tensor& street, const torch::Tensor& satellite,
                                 const torch::Tensor& identities);

  /// Mean per-pixel cross-entropy, skipping ignore-index pixels.
  torch::Tensor segmentation_loss(const torch::Tensor& images, const torch::Tensor& class_maps);

  /// Dispatches on kind; `images` replaces the batch's reconstruction slot.
  torch::Tensor task_loss(const torch::Tensor& images, const Batch& batch);

  /// Classification logits (classification/test_stub kinds).
  torch::Tensor logits(const torch::Tensor& images);

  /// L2-normalized concatenated part features (geolocation retrieval).
  torch::Tensor embed(const torch::Tensor& images);

  /// Per-pixel class predictions (segmentation).
  torch::Tensor predict_map(const torch::Tensor& images);

  void save_weights(const std::string& path);
  void load_weights(const std::string& path);

  /// Lifts the frozen contract for stub pretraining; re-freeze afterwards.
  void set_trainable(bool trainable);

  std::vector<torch::Tensor> parameters() const;
  torch::nn::Module& network() { return *net_; }

 private:
  torch::Tensor normalize(const torch::Tensor& images) const;
  torch::Tensor part_logits(const torch::Tensor& feature_map, int part) const;

  AdapterConfig cfg_;
  std::shared_ptr<torch::nn::Module> net_;
};

/// FNV-1a digest over every parameter tensor, in deterministic name order.
std::uint64_t freeze_check(const TaskAdapter& adapter);

/// Trains the stub network on clean images until it fits; used by the
/// stub-training CLI and by tests. Returns the final loss.
double train_stub_adapter(TaskAdapter& adapter, const Batch& clean_batch, int steps, double lr = 1e-3);

}  // namespace geoinpaint
