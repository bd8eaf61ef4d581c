#pragma once

#include <map>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace geoinpaint {

/// Per-run metric record; task metrics keyed by name (accuracy, recall@K,
/// ap, miou) in percent or [0,1] per their conventional scale.
struct MetricReport {
  double psnr = 0;  // dB; +inf when images are identical
  double ssim = 0;
  std::map<std::string, double> task_metrics;
  int sample_count = 0;

  std::string to_json() const;
  std::string to_csv_row() const;  // flat header+row pair
};

/// 10·log10(1/MSE) on [0,1] images; +inf sentinel for identical inputs.
double psnr(const torch::Tensor& reconstruction, const torch::Tensor& target);

/// PSNR restricted to mask==1 pixels (diagnostic).
double psnr_masked(const torch::Tensor& reconstruction, const torch::Tensor& target,
                   const torch::Tensor& mask);

/// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), C1=(0.01)^2,
/// C2=(0.03)^2 on [0,1] data, channels averaged, valid windows only.
double ssim(const torch::Tensor& reconstruction, const torch::Tensor& target);

/// 100 * correct / total.
double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

/// Percentage of queries whose true gallery item ranks in the cosine top-k.
/// ground_truth[q] is the gallery index of query q's single true match.
double recall_at_k(const torch::Tensor& query_embeddings, const torch::Tensor& gallery_embeddings,
                   const std::vector<int>& ground_truth, int k);

/// k for the "top 1%" protocol: ceil(gallery_size / 100).
int top1_percent_k(int gallery_size);

/// Mean average precision (percent) over per-query ranked relevance lists.
double average_precision(const std::vector<std::vector<bool>>& ranked_relevance);

/// Mean IoU over classes present in either map, skipping ignore-index pixels.
double miou(const torch::Tensor& pred_map, const torch::Tensor& gt_map, int num_classes,
            int ignore_index = 255);

}  // namespace geoinpaint
