#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "geoinpaint/adapters.hpp"
#include "geoinpaint/data.hpp"
#include "geoinpaint/losses.hpp"
#include "geoinpaint/lpips.hpp"
#include "geoinpaint/mask.hpp"
#include "geoinpaint/model.hpp"
#include "geoinpaint/metrics.hpp"

namespace geoinpaint {

struct OptimizerConfig {
  double lr = 2e-4;
  double disc_lr = -1;  // discriminator rate; < 0 means "same as lr"
  double beta1 = 0.5;
  double beta2 = 0.999;

  double effective_disc_lr() const { return disc_lr >= 0 ? disc_lr : lr; }
};

struct RunConfig {
  TaskKind task = TaskKind::test_stub;
  int image_size = 256;  // divisible by 32
  LossWeights weights;   // lambda defaults to 5; 1.2 for geolocation configs
  OptimizerConfig optimizer;
  int batch_size = 8;
  int max_steps = 1000;
  std::uint64_t seed = 0;
  bool maskmix_enabled = true;
  MixConfig maskmix;
  OcclusionSpec occlusion{0.15, 0.60};
  std::string manifest_path;
  std::string seed_pool_dir;
  std::string checkpoint_dir;
  std::string report_path;
  std::string loss_log_path;  // JSON-lines per-step breakdown
  GeneratorConfig generator;
  double disc_width_multiplier = 1.0;
  PerceptualLossConfig perceptual;
  AdapterConfig adapter;

  static RunConfig from_json_file(const std::string& path);
  static RunConfig from_json_string(const std::string& text);
  std::string to_json() const;
};

/// True when the deterministic-mode env toggle (GEOINPAINT_DETERMINISTIC)
/// is set to a nonzero value.
bool deterministic_mode();

enum class EvalMode {
  reconstruction,     // inpaint then score (the deployment path)
  occluded_baseline,  // score the occluded input itself
  clean,              // score clean images through the task network only
};

class Trainer {
 public:
  Trainer(RunConfig cfg, std::shared_ptr<TaskAdapter> adapter);

  /// One discriminator update (both discriminators, detached fakes) followed
  /// by one generator update. Throws on non-finite losses.
  LossBreakdown train_step(const Batch& batch);

  /// Builds the step's batch from the train split of the loaded manifest
  /// (mask mixing applied when enabled) and runs train_step.
  LossBreakdown train_step_auto();

  /// Deterministic batch for a given step index, derived from (seed, step).
  Batch make_train_batch(std::int64_t step);

  MetricReport evaluate(const std::vector<const ManifestRecord*>& test_records,
                        EvalMode mode = EvalMode::reconstruction);
  MetricReport evaluate_manifest(EvalMode mode = EvalMode::reconstruction);

  /// Inference-only reconstruction: generator forward plus hole composition,
  /// clamped to [0,1]. The task adapter is never touched here.
  torch::Tensor inpaint(const torch::Tensor& image, const torch::Tensor& mask);

  void save_checkpoint(const std::string& dir) const;
  void load_checkpoint(const std::string& dir);

  void load_data();  // reads manifest_path and seed pools

  std::int64_t step() const { return step_; }
  Generator generator() { return generator_; }
  PatchDiscriminator disc_coarse() { return disc_coarse_; }
  PatchDiscriminator disc_refined() { return disc_refined_; }
  PerceptualLoss perceptual() { return perceptual_; }
  std::shared_ptr<TaskAdapter> adapter() { return adapter_; }
  const RunConfig& config() const { return cfg_; }
  const DatasetManifest& manifest() const { return manifest_; }

 private:
  Sample load_sample(const ManifestRecord& rec, Rng& rng, bool training);

  RunConfig cfg_;
  std::shared_ptr<TaskAdapter> adapter_;
  Generator generator_{nullptr};
  PatchDiscriminator disc_coarse_{nullptr}, disc_refined_{nullptr};
  PerceptualLoss perceptual_{nullptr};
  std::unique_ptr<torch::optim::Adam> opt_g_, opt_dc_, opt_dr_;
  std::int64_t step_ = 0;
  DatasetManifest manifest_;
  std::map<std::string, std::vector<OcclusionMask>> seed_pools_;
};

/// Standalone inference entry: loads only the generator from a checkpoint.
torch::Tensor inpaint_with_checkpoint(const std::string& checkpoint_dir,
                                      const torch::Tensor& image, const torch::Tensor& mask);

}  // namespace geoinpaint
