#include "geoinpaint/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace geoinpaint {

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["psnr"] = std::isinf(psnr) ? 1e9 : psnr;
  j["ssim"] = ssim;
  j["sample_count"] = sample_count;
  for (const auto& [k, v] : task_metrics) j["task"][k] = v;
  return j.dump(2);
}

std::string MetricReport::to_csv_row() const {
  std::ostringstream header, row;
  header << "psnr,ssim,sample_count";
  row << psnr << "," << ssim << "," << sample_count;
  for (const auto& [k, v] : task_metrics) {
    header << "," << k;
    row << "," << v;
  }
  return header.str() + "\n" + row.str() + "\n";
}

double psnr(const torch::Tensor& reconstruction, const torch::Tensor& target) {
  TORCH_CHECK(reconstruction.sizes() == target.sizes(), "psnr: shape mismatch");
  double mse = (reconstruction - target).pow(2).mean().item<double>();
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double psnr_masked(const torch::Tensor& reconstruction, const torch::Tensor& target,
                   const torch::Tensor& mask) {
  auto m = mask.expand_as(reconstruction);
  double denom = m.sum().item<double>();
  TORCH_CHECK(denom > 0, "psnr_masked: empty mask");
  double mse = ((reconstruction - target).pow(2) * m).sum().item<double>() / denom;
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

torch::Tensor gaussian_window(int size, double sigma) {
  auto coords = torch::arange(size, torch::kFloat64) - (size - 1) / 2.0;
  auto g = torch::exp(-coords.pow(2) / (2 * sigma * sigma));
  g = g / g.sum();
  return g.outer(g);  // separable 2-D window
}

}  // namespace

double ssim(const torch::Tensor& reconstruction, const torch::Tensor& target) {
  TORCH_CHECK(reconstruction.sizes() == target.sizes(), "ssim: shape mismatch");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;

  auto x = reconstruction.detach().to(torch::kFloat64);
  auto y = target.detach().to(torch::kFloat64);
  if (x.dim() == 3) {
    x = x.unsqueeze(0);
    y = y.unsqueeze(0);
  }
  int64_t channels = x.size(1);
  TORCH_CHECK(x.size(2) >= kWin && x.size(3) >= kWin, "ssim: image smaller than the window");

  auto w = gaussian_window(kWin, kSigma).view({1, 1, kWin, kWin}).repeat({channels, 1, 1, 1});
  namespace F = torch::nn::functional;
  auto filt = [&](const torch::Tensor& t) {
    return F::conv2d(t, w, F::Conv2dFuncOptions().groups(channels));  // valid windows only
  };

  auto mu_x = filt(x), mu_y = filt(y);
  auto mu_x2 = mu_x.pow(2), mu_y2 = mu_y.pow(2), mu_xy = mu_x * mu_y;
  auto sigma_x2 = filt(x * x) - mu_x2;
  auto sigma_y2 = filt(y * y) - mu_y2;
  auto sigma_xy = filt(x * y) - mu_xy;

  auto ssim_map = ((2 * mu_xy + c1) * (2 * sigma_xy + c2)) /
                  ((mu_x2 + mu_y2 + c1) * (sigma_x2 + sigma_y2 + c2));
  return ssim_map.mean().item<double>();
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.empty() || predictions.size() != labels.size())
    throw std::invalid_argument("accuracy: empty or mismatched inputs");
  int correct = 0;
  for (size_t i = 0; i < predictions.size(); ++i) correct += predictions[i] == labels[i];
  return 100.0 * correct / static_cast<double>(predictions.size());
}

double recall_at_k(const torch::Tensor& query_embeddings, const torch::Tensor& gallery_embeddings,
                   const std::vector<int>& ground_truth, int k) {
  TORCH_CHECK(k >= 1, "recall_at_k: k must be >= 1");
  int nq = static_cast<int>(query_embeddings.size(0));
  int ng = static_cast<int>(gallery_embeddings.size(0));
  TORCH_CHECK(static_cast<int>(ground_truth.size()) == nq,
              "recall_at_k: one ground-truth entry per query required");

  auto qn = query_embeddings / (query_embeddings.norm(2, 1, true) + 1e-12);
  auto gn = gallery_embeddings / (gallery_embeddings.norm(2, 1, true) + 1e-12);
  auto sim = qn.matmul(gn.t());  // cosine similarity

  int kk = std::min(k, ng);
  auto topk = std::get<1>(sim.topk(kk, 1));
  auto acc = topk.accessor<int64_t, 2>();
  int hits = 0;
  for (int q = 0; q < nq; ++q) {
    TORCH_CHECK(ground_truth[q] >= 0 && ground_truth[q] < ng,
                "recall_at_k: query without valid ground truth");
    for (int j = 0; j < kk; ++j)
      if (acc[q][j] == ground_truth[q]) {
        ++hits;
        break;
      }
  }
  return 100.0 * hits / static_cast<double>(nq);
}

int top1_percent_k(int gallery_size) {
  return std::max(1, (gallery_size + 99) / 100);
}

double average_precision(const std::vector<std::vector<bool>>& ranked_relevance) {
  if (ranked_relevance.empty()) throw std::invalid_argument("average_precision: empty input");
  double sum_ap = 0;
  for (const auto& rel : ranked_relevance) {
    int hits = 0;
    double ap = 0;
    for (size_t r = 0; r < rel.size(); ++r) {
      if (rel[r]) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(r + 1);
      }
    }
    if (hits > 0) ap /= hits;
    sum_ap += ap;
  }
  return 100.0 * sum_ap / static_cast<double>(ranked_relevance.size());
}

double miou(const torch::Tensor& pred_map, const torch::Tensor& gt_map, int num_classes,
            int ignore_index) {
  TORCH_CHECK(pred_map.sizes() == gt_map.sizes(), "miou: size mismatch");
  auto pred = pred_map.flatten().to(torch::kLong);
  auto gt = gt_map.flatten().to(torch::kLong);
  auto valid = gt != ignore_index;
  pred = pred.masked_select(valid);
  gt = gt.masked_select(valid);

  double iou_sum = 0;
  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    auto p = pred == c;
    auto g = gt == c;
    double inter = (p & g).sum().item<double>();
    double uni = (p | g).sum().item<double>();
    if (uni == 0) continue;  // class absent from both maps
    iou_sum += inter / uni;
    ++present;
  }
  return present > 0 ? iou_sum / present : 0.0;
}

}  // namespace geoinpaint
