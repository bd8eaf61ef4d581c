#include "geoinpaint/data.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <json.hpp>

namespace geoinpaint {

namespace fs = std::filesystem;
using nlohmann::json;

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "classification") return TaskKind::classification;
  if (s == "geolocation") return TaskKind::geolocation;
  if (s == "segmentation") return TaskKind::segmentation;
  if (s == "test_stub") return TaskKind::test_stub;
  throw std::invalid_argument("unknown task kind: " + s);
}

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::classification: return "classification";
    case TaskKind::geolocation: return "geolocation";
    case TaskKind::segmentation: return "segmentation";
    case TaskKind::test_stub: return "test_stub";
  }
  return "?";
}

std::vector<const ManifestRecord*> DatasetManifest::split_records(Split s) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records)
    if (r.split == s) out.push_back(&r);
  return out;
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest not found: " + path);

  static const std::set<std::string> known = {"image",     "mask",     "seed_pool", "label",
                                              "split",     "satellite", "identity",  "class_map"};

  DatasetManifest manifest;
  std::set<std::string> train_images, test_images;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line);
    for (auto& [k, v] : j.items())
      if (!known.count(k))
        throw std::runtime_error("manifest line " + std::to_string(lineno) + ": unknown field '" + k + "'");

    ManifestRecord rec;
    rec.image = j.at("image").get<std::string>();
    std::string split = j.at("split").get<std::string>();
    if (split == "train")
      rec.split = Split::train;
    else if (split == "test")
      rec.split = Split::test;
    else
      throw std::runtime_error("manifest line " + std::to_string(lineno) + ": unknown split '" + split + "'");

    if (j.contains("mask")) rec.mask = j["mask"].get<std::string>();
    if (j.contains("seed_pool")) rec.seed_pool = j["seed_pool"].get<std::string>();
    if (rec.mask.has_value() == rec.seed_pool.has_value())
      throw std::runtime_error("manifest line " + std::to_string(lineno) +
                               ": exactly one of mask/seed_pool required");

    if (j.contains("label")) {
      if (j["label"].is_number_integer())
        rec.class_id = j["label"].get<int>();
      else if (j["label"].is_string())
        rec.class_map = j["label"].get<std::string>();
    }
    if (j.contains("satellite")) rec.satellite = j["satellite"].get<std::string>();
    if (j.contains("identity")) rec.identity = j["identity"].get<int>();
    if (j.contains("class_map")) rec.class_map = j["class_map"].get<std::string>();

    auto& same = rec.split == Split::train ? train_images : test_images;
    auto& other = rec.split == Split::train ? test_images : train_images;
    if (other.count(rec.image))
      throw std::runtime_error("manifest: image in both splits: " + rec.image);
    same.insert(rec.image);

    manifest.records.push_back(std::move(rec));
  }
  return manifest;
}

// -- image / mask I/O -------------------------------------------------------

torch::Tensor load_image(const std::string& path) {
  cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) throw std::runtime_error("cannot read image: " + path);
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  auto t = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8).clone();
  return t.permute({2, 0, 1}).to(torch::kFloat32).div_(255.0);
}

void save_image(const torch::Tensor& chw, const std::string& path) {
  auto t = chw.detach().clamp(0, 1).mul(255.0).round().to(torch::kUInt8);
  t = t.permute({1, 2, 0}).contiguous();  // HWC RGB
  cv::Mat rgb(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), CV_8UC3, t.data_ptr());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path, bgr)) throw std::runtime_error("cannot write image: " + path);
}

OcclusionMask load_mask_png(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_GRAYSCALE);
  if (m.empty()) throw std::runtime_error("cannot read mask: " + path);
  OcclusionMask out(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) out.at(r, c) = m.at<std::uint8_t>(r, c) >= 128 ? 1 : 0;
  return out;
}

void save_mask_png(const OcclusionMask& mask, const std::string& path) {
  cv::Mat m(mask.height, mask.width, CV_8UC1);
  for (int r = 0; r < mask.height; ++r)
    for (int c = 0; c < mask.width; ++c) m.at<std::uint8_t>(r, c) = mask.at(r, c) ? 255 : 0;
  if (!cv::imwrite(path, m)) throw std::runtime_error("cannot write mask: " + path);
}

torch::Tensor load_class_map(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_GRAYSCALE);
  if (m.empty()) throw std::runtime_error("cannot read class map: " + path);
  auto t = torch::from_blob(m.data, {m.rows, m.cols}, torch::kUInt8).clone();
  return t.to(torch::kLong);
}

torch::Tensor mask_to_tensor(const OcclusionMask& mask) {
  auto t = torch::from_blob(const_cast<std::uint8_t*>(mask.grid.data()),
                            {1, mask.height, mask.width}, torch::kUInt8)
               .clone();
  return t.to(torch::kFloat32);
}

OcclusionMask tensor_to_mask(const torch::Tensor& t) {
  auto m = t.detach().squeeze().to(torch::kFloat32).contiguous();
  TORCH_CHECK(m.dim() == 2, "tensor_to_mask expects a single-channel mask");
  OcclusionMask out(static_cast<int>(m.size(0)), static_cast<int>(m.size(1)));
  auto acc = m.accessor<float, 2>();
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c) out.at(r, c) = acc[r][c] > 0.5f ? 1 : 0;
  return out;
}

// -- composition and batching -----------------------------------------------

torch::Tensor compose_occluded(const torch::Tensor& clean, const torch::Tensor& mask) {
  TORCH_CHECK(clean.size(-1) == mask.size(-1) && clean.size(-2) == mask.size(-2),
              "compose_occluded: dimension mismatch");
  return clean * (1.0 - mask);
}

std::pair<torch::Tensor, OcclusionMask> synthesize_occlusion(
    const torch::Tensor& image, const std::vector<OcclusionMask>& seed_pool,
    const OcclusionSpec& spec, Rng& rng) {
  int h = static_cast<int>(image.size(-2)), w = static_cast<int>(image.size(-1));
  OcclusionMask m = sample_mask(seed_pool, spec, h, w, rng);
  return {compose_occluded(image, mask_to_tensor(m)), std::move(m)};
}

Batch make_batch(const std::vector<Sample>& samples, int size) {
  if (samples.empty()) throw std::invalid_argument("make_batch: empty sample list");
  namespace F = torch::nn::functional;
  auto resize_img = [&](const torch::Tensor& img) {
    if (img.size(-1) == size && img.size(-2) == size) return img;
    return F::interpolate(img.unsqueeze(0),
                          F::InterpolateFuncOptions()
                              .size(std::vector<int64_t>{size, size})
                              .mode(torch::kBilinear)
                              .align_corners(false))
        .squeeze(0);
  };
  auto resize_mask_t = [&](const torch::Tensor& m) {
    if (m.size(-1) == size && m.size(-2) == size) return m;
    auto r = F::interpolate(m.unsqueeze(0), F::InterpolateFuncOptions()
                                                .size(std::vector<int64_t>{size, size})
                                                .mode(torch::kNearest))
                 .squeeze(0);
    return (r > 0.5).to(torch::kFloat32);
  };

  std::vector<torch::Tensor> cleans, occs, masks, sats, cmaps;
  std::vector<int64_t> cls, ids;
  bool has_sat = samples.front().satellite.defined();
  bool has_cmap = samples.front().class_map.defined();

  for (const auto& s : samples) {
    auto clean = resize_img(s.clean);
    auto mask = resize_mask_t(s.mask);
    cleans.push_back(clean);
    masks.push_back(mask);
    occs.push_back(compose_occluded(clean, mask));  // recompose so clean/occluded agree off-mask
    cls.push_back(s.class_id);
    ids.push_back(s.identity);
    if (has_sat) sats.push_back(resize_img(s.satellite));
    if (has_cmap) {
      auto cm = s.class_map;
      if (cm.size(-1) != size || cm.size(-2) != size) {
        cm = F::interpolate(cm.unsqueeze(0).unsqueeze(0).to(torch::kFloat32),
                            F::InterpolateFuncOptions()
                                .size(std::vector<int64_t>{size, size})
                                .mode(torch::kNearest))
                 .squeeze(0)
                 .squeeze(0)
                 .to(torch::kLong);
      }
      cmaps.push_back(cm);
    }
  }

  Batch b;
  b.clean = torch::stack(cleans);
  b.occluded = torch::stack(occs);
  b.mask = torch::stack(masks);
  b.generator_input = torch::cat({b.occluded, b.mask}, 1);
  b.class_ids = torch::tensor(cls, torch::kLong);
  b.identities = torch::tensor(ids, torch::kLong);
  if (has_sat) b.satellites = torch::stack(sats);
  if (has_cmap) b.class_maps = torch::stack(cmaps);
  return b;
}

std::vector<OcclusionMask> load_seed_pool(const std::string& dir) {
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());
  std::vector<OcclusionMask> pool;
  for (const auto& p : paths) pool.push_back(load_mask_png(p.string()));
  if (pool.empty()) throw std::runtime_error("no seed masks in " + dir);
  return pool;
}

}  // namespace geoinpaint
