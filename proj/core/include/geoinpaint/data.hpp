#pragma once

#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "geoinpaint/mask.hpp"

namespace geoinpaint {

enum class TaskKind { classification, geolocation, segmentation, test_stub };

TaskKind task_kind_from_string(const std::string& s);
std::string to_string(TaskKind kind);

enum class Split { train, test };

/// One manifest line. Exactly one of `mask` / `seed_pool` is set.
struct ManifestRecord {
  std::string image;
  std::optional<std::string> mask;
  std::optional<std::string> seed_pool;
  Split split = Split::train;

  // Label, per task kind.
  int class_id = -1;                    // classification / test_stub
  std::string satellite;                // geolocation: paired clean view
  int identity = -1;                    // geolocation
  std::string class_map;                // segmentation: class-id PNG path
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;
  TaskKind task = TaskKind::test_stub;
  int image_size = 256;

  std::vector<const ManifestRecord*> split_records(Split s) const;
};

/// Parses and validates a JSON-lines manifest. Rejects unknown fields,
/// unknown splits and images listed in both splits.
DatasetManifest load_manifest(const std::string& path);

/// One training/eval sample; images are CHW float in [0,1].
struct Sample {
  torch::Tensor clean;     // 3xHxW
  torch::Tensor occluded;  // 3xHxW
  torch::Tensor mask;      // 1xHxW, values in {0,1}
  int class_id = -1;
  int identity = -1;
  torch::Tensor satellite;  // 3xHxW (geolocation only)
  torch::Tensor class_map;  // HxW long (segmentation only)
};

/// Stacked samples ready for the generator.
struct Batch {
  torch::Tensor clean;            // Nx3xHxW
  torch::Tensor occluded;         // Nx3xHxW
  torch::Tensor mask;             // Nx1xHxW
  torch::Tensor generator_input;  // Nx4xHxW = occluded ⊕ mask
  torch::Tensor class_ids;        // N long
  torch::Tensor identities;       // N long
  torch::Tensor satellites;       // Nx3xHxW
  torch::Tensor class_maps;       // NxHxW long
  int64_t size() const { return clean.size(0); }
};

// -- image / mask I/O ------------------------------------------------------

torch::Tensor load_image(const std::string& path);           // 3xHxW float [0,1]
void save_image(const torch::Tensor& chw, const std::string& path);
OcclusionMask load_mask_png(const std::string& path);         // 255 -> occluded
void save_mask_png(const OcclusionMask& mask, const std::string& path);
torch::Tensor load_class_map(const std::string& path);        // HxW long

torch::Tensor mask_to_tensor(const OcclusionMask& mask);      // 1xHxW float
OcclusionMask tensor_to_mask(const torch::Tensor& t);

// -- composition and batching ----------------------------------------------

/// occluded = clean ⊙ (1-M); hole pixels take the fill value 0.
torch::Tensor compose_occluded(const torch::Tensor& clean, const torch::Tensor& mask);

/// Randomly places a pool mask on the image per the occlusion spec.
std::pair<torch::Tensor, OcclusionMask> synthesize_occlusion(
    const torch::Tensor& image, const std::vector<OcclusionMask>& seed_pool,
    const OcclusionSpec& spec, Rng& rng);

/// Resizes (images bilinear, masks nearest + re-binarize), recomposes the
/// occluded view at the target size, and stacks into a Batch.
Batch make_batch(const std::vector<Sample>& samples, int size);

/// Loads every PNG in a directory as a seed mask.
std::vector<OcclusionMask> load_seed_pool(const std::string& dir);

}  // namespace geoinpaint
