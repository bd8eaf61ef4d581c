#include "geoinpaint/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace geoinpaint {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kCheckpointVersion = 1;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  // splitmix64 over the combined words
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ull * (a + 1) + 0xbf58476d1ce4e5b9ull * (b + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

}  // namespace

bool deterministic_mode() {
  const char* v = std::getenv("GEOINPAINT_DETERMINISTIC");
  return v != nullptr && std::string(v) != "0" && std::string(v) != "";
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

RunConfig RunConfig::from_json_string(const std::string& text) {
  json j = json::parse(text);
  RunConfig cfg;
  if (j.contains("task")) cfg.task = task_kind_from_string(j["task"].get<std::string>());
  cfg.image_size = j.value("image_size", cfg.image_size);
  if (cfg.image_size % 32 != 0)
    throw std::runtime_error("config: image_size must be divisible by 32");
  // lambda default follows the task unless pinned explicitly
  cfg.weights.lambda_task = cfg.task == TaskKind::geolocation ? 1.2 : 5.0;
  cfg.weights.lambda_task = j.value("lambda_task", cfg.weights.lambda_task);
  if (cfg.weights.lambda_task < 0) throw std::runtime_error("config: lambda_task must be >= 0");
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    cfg.optimizer.lr = o.value("lr", cfg.optimizer.lr);
    cfg.optimizer.disc_lr = o.value("disc_lr", cfg.optimizer.disc_lr);
    cfg.optimizer.beta1 = o.value("beta1", cfg.optimizer.beta1);
    cfg.optimizer.beta2 = o.value("beta2", cfg.optimizer.beta2);
  }
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.max_steps = j.value("max_steps", cfg.max_steps);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("maskmix")) {
    const auto& m = j["maskmix"];
    cfg.maskmix_enabled = m.value("enabled", true);
    cfg.maskmix.threshold = m.value("threshold", cfg.maskmix.threshold);
    cfg.maskmix.ranges.max_translate_frac =
        m.value("max_translate_frac", cfg.maskmix.ranges.max_translate_frac);
    cfg.maskmix.ranges.max_shear = m.value("max_shear", cfg.maskmix.ranges.max_shear);
    cfg.maskmix.ranges.max_rotate_deg =
        m.value("max_rotate_deg", cfg.maskmix.ranges.max_rotate_deg);
  }
  if (j.contains("occlusion")) {
    cfg.occlusion.area_lo = j["occlusion"].value("area_lo", cfg.occlusion.area_lo);
    cfg.occlusion.area_hi = j["occlusion"].value("area_hi", cfg.occlusion.area_hi);
  }
  if (j.contains("data")) {
    cfg.manifest_path = j["data"].value("manifest", "");
    cfg.seed_pool_dir = j["data"].value("seed_pool", "");
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    double wm = m.value("width_multiplier", 1.0);
    int bps = m.value("blocks_per_stage", 2);
    cfg.generator.coarse.width_multiplier = wm;
    cfg.generator.refine.width_multiplier = wm;
    cfg.generator.coarse.blocks_per_stage = bps;
    cfg.generator.refine.blocks_per_stage = bps;
    cfg.generator.pretrained_encoder = m.value("pretrained_encoder", "");
    cfg.disc_width_multiplier = m.value("disc_width_multiplier", 1.0);
  }
  if (j.contains("perceptual")) {
    const auto& p = j["perceptual"];
    if (p.value("tiny", false)) cfg.perceptual = PerceptualLossConfig::tiny();
    if (p.contains("stage_widths"))
      cfg.perceptual.stage_widths = p["stage_widths"].get<std::vector<int>>();
    if (p.contains("convs_per_stage"))
      cfg.perceptual.convs_per_stage = p["convs_per_stage"].get<std::vector<int>>();
    cfg.perceptual.weights_path = p.value("weights", "");
  }
  if (j.contains("adapter")) {
    const auto& a = j["adapter"];
    cfg.adapter.kind = a.contains("kind") ? task_kind_from_string(a["kind"].get<std::string>())
                                          : cfg.task;
    cfg.adapter.weights_path = a.value("weights", "");
    cfg.adapter.num_classes = a.value("num_classes", cfg.adapter.num_classes);
    cfg.adapter.num_identities = a.value("num_identities", cfg.adapter.num_identities);
    cfg.adapter.parts = a.value("parts", cfg.adapter.parts);
    cfg.adapter.ignore_index = a.value("ignore_index", cfg.adapter.ignore_index);
    cfg.adapter.arch = a.value("arch", cfg.adapter.arch);
    cfg.adapter.init_seed = a.value("init_seed", cfg.adapter.init_seed);
    if (a.contains("norm_mean"))
      for (int i = 0; i < 3; ++i) cfg.adapter.norm_mean[i] = a["norm_mean"][i].get<double>();
    if (a.contains("norm_std"))
      for (int i = 0; i < 3; ++i) cfg.adapter.norm_std[i] = a["norm_std"][i].get<double>();
  } else {
    cfg.adapter.kind = cfg.task;
  }
  if (j.contains("paths")) {
    cfg.checkpoint_dir = j["paths"].value("checkpoint_dir", "");
    cfg.report_path = j["paths"].value("report", "");
    cfg.loss_log_path = j["paths"].value("loss_log", "");
  }
  return cfg;
}

std::string RunConfig::to_json() const {
  json j;
  j["task"] = to_string(task);
  j["image_size"] = image_size;
  j["lambda_task"] = weights.lambda_task;
  j["optimizer"] = {{"lr", optimizer.lr},
                    {"disc_lr", optimizer.disc_lr},
                    {"beta1", optimizer.beta1},
                    {"beta2", optimizer.beta2}};
  j["batch_size"] = batch_size;
  j["max_steps"] = max_steps;
  j["seed"] = seed;
  j["maskmix"] = {{"enabled", maskmix_enabled},
                  {"threshold", maskmix.threshold},
                  {"max_translate_frac", maskmix.ranges.max_translate_frac},
                  {"max_shear", maskmix.ranges.max_shear},
                  {"max_rotate_deg", maskmix.ranges.max_rotate_deg}};
  j["occlusion"] = {{"area_lo", occlusion.area_lo}, {"area_hi", occlusion.area_hi}};
  j["data"] = {{"manifest", manifest_path}, {"seed_pool", seed_pool_dir}};
  j["model"] = {{"width_multiplier", generator.coarse.width_multiplier},
                {"blocks_per_stage", generator.coarse.blocks_per_stage},
                {"pretrained_encoder", generator.pretrained_encoder},
                {"disc_width_multiplier", disc_width_multiplier}};
  j["perceptual"] = {{"weights", perceptual.weights_path},
                     {"stage_widths", perceptual.stage_widths},
                     {"convs_per_stage", perceptual.convs_per_stage}};
  j["adapter"] = {{"kind", to_string(adapter.kind)},
                  {"weights", adapter.weights_path},
                  {"num_classes", adapter.num_classes},
                  {"num_identities", adapter.num_identities},
                  {"parts", adapter.parts},
                  {"arch", adapter.arch},
                  {"init_seed", adapter.init_seed}};
  j["paths"] = {{"checkpoint_dir", checkpoint_dir},
                {"report", report_path},
                {"loss_log", loss_log_path}};
  return j.dump(2);
}

Trainer::Trainer(RunConfig cfg, std::shared_ptr<TaskAdapter> adapter)
    : cfg_(std::move(cfg)), adapter_(std::move(adapter)) {
  if (deterministic_mode()) at::set_num_threads(1);
  torch::manual_seed(cfg_.seed);

  generator_ = Generator(cfg_.generator);
  PatchDiscriminatorConfig dcfg;
  dcfg.width_multiplier = cfg_.disc_width_multiplier;
  disc_coarse_ = PatchDiscriminator(dcfg);
  disc_refined_ = PatchDiscriminator(dcfg);
  perceptual_ = PerceptualLoss(cfg_.perceptual);

  auto opts = torch::optim::AdamOptions(cfg_.optimizer.lr)
                  .betas({cfg_.optimizer.beta1, cfg_.optimizer.beta2});
  auto disc_opts = torch::optim::AdamOptions(cfg_.optimizer.effective_disc_lr())
                       .betas({cfg_.optimizer.beta1, cfg_.optimizer.beta2});
  opt_g_ = std::make_unique<torch::optim::Adam>(generator_->parameters(), opts);
  opt_dc_ = std::make_unique<torch::optim::Adam>(disc_coarse_->parameters(), disc_opts);
  opt_dr_ = std::make_unique<torch::optim::Adam>(disc_refined_->parameters(), disc_opts);
}

void Trainer::load_data() {
  manifest_ = load_manifest(cfg_.manifest_path);
  manifest_.task = cfg_.task;
  manifest_.image_size = cfg_.image_size;
  for (const auto& rec : manifest_.records)
    if (rec.seed_pool && !seed_pools_.count(*rec.seed_pool))
      seed_pools_[*rec.seed_pool] = load_seed_pool(*rec.seed_pool);
}

Sample Trainer::load_sample(const ManifestRecord& rec, Rng& rng, bool training) {
  Sample s;
  s.clean = load_image(rec.image);
  OcclusionMask mask;
  if (rec.mask) {
    mask = load_mask_png(*rec.mask);
    if (mask.height != s.clean.size(1) || mask.width != s.clean.size(2))
      mask = resize_mask(mask, static_cast<int>(s.clean.size(1)),
                         static_cast<int>(s.clean.size(2)));
  } else {
    mask = sample_mask(seed_pools_.at(*rec.seed_pool), cfg_.occlusion,
                       static_cast<int>(s.clean.size(1)), static_cast<int>(s.clean.size(2)), rng);
  }
  if (training && cfg_.maskmix_enabled) {
    MixConfig mix = cfg_.maskmix;
    mask = maskmix(mask, mix, rng);
  }
  s.mask = mask_to_tensor(mask);
  s.occluded = compose_occluded(s.clean, s.mask);
  s.class_id = rec.class_id;
  s.identity = rec.identity;
  if (!rec.satellite.empty()) s.satellite = load_image(rec.satellite);
  if (!rec.class_map.empty()) s.class_map = load_class_map(rec.class_map);
  return s;
}

Batch Trainer::make_train_batch(std::int64_t step) {
  auto train = manifest_.split_records(Split::train);
  if (train.empty()) throw std::runtime_error("make_train_batch: no train records loaded");
  std::vector<Sample> samples;
  Rng pick_rng(mix_seed(cfg_.seed, static_cast<std::uint64_t>(step)));
  std::uniform_int_distribution<size_t> pick(0, train.size() - 1);
  for (int i = 0; i < cfg_.batch_size; ++i) {
    size_t idx = pick(pick_rng);
    // per-sample stream independent of worker layout
    Rng sample_rng(mix_seed(cfg_.seed, static_cast<std::uint64_t>(step), idx * 131 + i));
    samples.push_back(load_sample(*train[idx], sample_rng, /*training=*/true));
  }
  return make_batch(samples, cfg_.image_size);
}

LossBreakdown Trainer::train_step(const Batch& batch) {
  generator_->train();
  disc_coarse_->train();
  disc_refined_->train();

  auto out = generator_->forward(batch.generator_input, batch.mask);
  auto fake_coarse = compose_discriminator_input(out.coarse, batch.occluded, batch.mask);
  auto fake_refined = compose_discriminator_input(out.refined, batch.occluded, batch.mask);

  // Discriminator updates on detached fakes.
  auto adv = adversarial_losses(disc_coarse_, disc_refined_, batch.occluded, batch.clean,
                                fake_coarse, fake_refined);
  opt_dc_->zero_grad();
  adv.disc_coarse.backward();
  opt_dc_->step();
  opt_dr_->zero_grad();
  adv.disc_refined.backward();
  opt_dr_->step();

  // Generator update against the freshly updated discriminators.
  auto l1_c = geoinpaint::l1_loss(out.coarse, batch.clean);
  auto l1_r = geoinpaint::l1_loss(out.refined, batch.clean);
  auto lpips = perceptual_->forward(out.refined.clamp(0, 1), batch.clean);
  auto g_adv = adversarial_losses(disc_coarse_, disc_refined_, batch.occluded, batch.clean,
                                  fake_coarse, fake_refined)
                   .generator;
  // Task loss sees the hole-composed reconstruction, as at deployment.
  torch::Tensor task = torch::zeros({}, batch.clean.options());
  if (cfg_.weights.lambda_task > 0)
    task = adapter_->task_loss(fake_refined.clamp(0, 1), batch);

  auto total = l1_c + l1_r + lpips + g_adv + cfg_.weights.lambda_task * task;
  opt_g_->zero_grad();
  total.backward();
  opt_g_->step();

  LossComponents parts;
  parts.l1_coarse = l1_c.item<double>();
  parts.l1_refined = l1_r.item<double>();
  parts.perceptual_refined = lpips.item<double>();
  parts.gan_generator = g_adv.item<double>();
  parts.gan_discriminator_coarse = adv.disc_coarse.item<double>();
  parts.gan_discriminator_refined = adv.disc_refined.item<double>();
  parts.task = task.item<double>();
  auto breakdown = overall_loss(parts, cfg_.weights);
  if (!std::isfinite(breakdown.total)) {
    std::ostringstream dump;
    dump << "non-finite loss at step " << step_ << ": l1_c=" << parts.l1_coarse
         << " l1_r=" << parts.l1_refined << " lpips=" << parts.perceptual_refined
         << " g_adv=" << parts.gan_generator << " d_c=" << parts.gan_discriminator_coarse
         << " d_r=" << parts.gan_discriminator_refined << " task=" << parts.task;
    throw std::runtime_error(dump.str());
  }
  ++step_;

  if (!cfg_.loss_log_path.empty()) {
    json j = {{"step", step_},
              {"l1_c", breakdown.l1_coarse},
              {"l1_r", breakdown.l1_refined},
              {"lpips", breakdown.perceptual_refined},
              {"g_adv", breakdown.gan_generator},
              {"d_c", breakdown.gan_discriminator_coarse},
              {"d_r", breakdown.gan_discriminator_refined},
              {"task", breakdown.task},
              {"total", breakdown.total}};
    std::ofstream log(cfg_.loss_log_path, std::ios::app);
    log << j.dump() << "\n";
  }
  return breakdown;
}

LossBreakdown Trainer::train_step_auto() { return train_step(make_train_batch(step_)); }

torch::Tensor Trainer::inpaint(const torch::Tensor& image, const torch::Tensor& mask) {
  TORCH_CHECK(image.size(-1) % 32 == 0 && image.size(-2) % 32 == 0,
              "inpaint: image dimensions must be divisible by 32");
  torch::NoGradGuard ng;
  generator_->eval();
  auto img = image.dim() == 3 ? image.unsqueeze(0) : image;
  auto m = mask.dim() == 3 ? mask.unsqueeze(0) : mask;
  auto occluded = compose_occluded(img, m);
  auto out = generator_->forward(torch::cat({occluded, m}, 1), m);
  auto composed = compose_discriminator_input(out.refined, occluded, m).clamp(0, 1);
  return image.dim() == 3 ? composed.squeeze(0) : composed;
}

MetricReport Trainer::evaluate(const std::vector<const ManifestRecord*>& test_records,
                               EvalMode mode) {
  if (test_records.empty()) throw std::runtime_error("evaluate: empty test split");
  torch::NoGradGuard ng;
  generator_->eval();

  MetricReport report;
  double psnr_sum = 0, ssim_sum = 0;
  int quality_count = 0;
  std::vector<int> preds, labels;
  std::vector<torch::Tensor> query_embeds, gallery_embeds;
  double iou_sum = 0;
  int iou_count = 0;

  Rng rng(mix_seed(cfg_.seed, 0xe7a1));
  for (const auto* rec : test_records) {
    // Test masks are always pre-baked; mask mixing never runs here.
    if (!rec->mask && mode != EvalMode::clean)
      throw std::runtime_error("evaluate: test record without a pre-baked mask: " + rec->image);
    Sample s;
    s.clean = load_image(rec->image);
    if (rec->mask) {
      auto mask = load_mask_png(*rec->mask);
      if (mask.height != s.clean.size(1) || mask.width != s.clean.size(2))
        mask = resize_mask(mask, static_cast<int>(s.clean.size(1)),
                           static_cast<int>(s.clean.size(2)));
      s.mask = mask_to_tensor(mask);
    } else {
      s.mask = torch::zeros({1, s.clean.size(1), s.clean.size(2)});
    }
    s.occluded = compose_occluded(s.clean, s.mask);
    s.class_id = rec->class_id;
    s.identity = rec->identity;
    if (!rec->satellite.empty()) s.satellite = load_image(rec->satellite);
    if (!rec->class_map.empty()) s.class_map = load_class_map(rec->class_map);
    Batch b = make_batch({s}, cfg_.image_size);

    torch::Tensor scored;
    switch (mode) {
      case EvalMode::reconstruction: {
        auto out = generator_->forward(b.generator_input, b.mask);
        scored = compose_discriminator_input(out.refined, b.occluded, b.mask).clamp(0, 1);
        break;
      }
      case EvalMode::occluded_baseline:
        scored = b.occluded;
        break;
      case EvalMode::clean:
        scored = b.clean;
        break;
    }

    if (mode != EvalMode::clean) {
      double p = psnr(scored, b.clean);
      if (std::isfinite(p)) {
        psnr_sum += p;
        ++quality_count;
      }
      ssim_sum += ssim(scored, b.clean);
    }

    switch (cfg_.task) {
      case TaskKind::classification:
      case TaskKind::test_stub: {
        auto logit = adapter_->logits(scored);
        preds.push_back(static_cast<int>(logit.argmax(1).item<int64_t>()));
        labels.push_back(rec->class_id);
        break;
      }
      case TaskKind::geolocation: {
        query_embeds.push_back(adapter_->embed(scored).squeeze(0));
        gallery_embeds.push_back(adapter_->embed(b.satellites).squeeze(0));
        break;
      }
      case TaskKind::segmentation: {
        auto pred = adapter_->predict_map(scored).squeeze(0);
        iou_sum += miou(pred, b.class_maps.squeeze(0), cfg_.adapter.num_classes,
                        cfg_.adapter.ignore_index);
        ++iou_count;
        break;
      }
    }
    ++report.sample_count;
  }

  report.psnr = quality_count > 0 ? psnr_sum / quality_count
                                  : std::numeric_limits<double>::infinity();
  report.ssim = mode != EvalMode::clean ? ssim_sum / report.sample_count : 1.0;

  if (!preds.empty()) report.task_metrics["accuracy"] = accuracy(preds, labels);
  if (!query_embeds.empty()) {
    auto q = torch::stack(query_embeds);
    auto g = torch::stack(gallery_embeds);
    std::vector<int> gt(query_embeds.size());
    for (size_t i = 0; i < gt.size(); ++i) gt[i] = static_cast<int>(i);
    int ng_sz = static_cast<int>(gallery_embeds.size());
    report.task_metrics["recall@1"] = recall_at_k(q, g, gt, 1);
    report.task_metrics["recall@5"] = recall_at_k(q, g, gt, std::min(5, ng_sz));
    report.task_metrics["recall@10"] = recall_at_k(q, g, gt, std::min(10, ng_sz));
    report.task_metrics["recall@top1%"] = recall_at_k(q, g, gt, top1_percent_k(ng_sz));
    // single relevant item per query: AP from the full ranking
    auto sim = q.matmul(g.t());
    auto order = sim.argsort(1, /*descending=*/true);
    std::vector<std::vector<bool>> rel;
    auto acc = order.accessor<int64_t, 2>();
    for (int qi = 0; qi < static_cast<int>(gt.size()); ++qi) {
      std::vector<bool> row(ng_sz, false);
      for (int r = 0; r < ng_sz; ++r) row[r] = acc[qi][r] == gt[qi];
      rel.push_back(std::move(row));
    }
    report.task_metrics["ap"] = average_precision(rel);
  }
  if (iou_count > 0) report.task_metrics["miou"] = iou_sum / iou_count;
  return report;
}

MetricReport Trainer::evaluate_manifest(EvalMode mode) {
  return evaluate(manifest_.split_records(Split::test), mode);
}

void Trainer::save_checkpoint(const std::string& dir) const {
  fs::create_directories(dir);
  torch::save(generator_, (fs::path(dir) / "generator.pt").string());
  torch::save(disc_coarse_, (fs::path(dir) / "disc_coarse.pt").string());
  torch::save(disc_refined_, (fs::path(dir) / "disc_refined.pt").string());
  torch::save(*opt_g_, (fs::path(dir) / "opt_g.pt").string());
  torch::save(*opt_dc_, (fs::path(dir) / "opt_dc.pt").string());
  torch::save(*opt_dr_, (fs::path(dir) / "opt_dr.pt").string());
  torch::save(at::detail::getDefaultCPUGenerator().get_state(),
              (fs::path(dir) / "rng.pt").string());

  json meta = {{"version", kCheckpointVersion},
               {"step", step_},
               {"lambda", cfg_.weights.lambda_task},
               {"image_size", cfg_.image_size},
               {"task", to_string(cfg_.task)},
               {"config", json::parse(cfg_.to_json())}};
  std::ofstream out(fs::path(dir) / "meta.json");
  out << meta.dump(2) << "\n";
}

void Trainer::load_checkpoint(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "meta.json");
  if (!in) throw std::runtime_error("checkpoint missing meta.json: " + dir);
  json meta = json::parse(in);
  if (meta.value("version", -1) != kCheckpointVersion)
    throw std::runtime_error("checkpoint version mismatch");
  if (meta.value("image_size", -1) != cfg_.image_size)
    throw std::runtime_error("checkpoint image_size does not match the run config");

  torch::load(generator_, (fs::path(dir) / "generator.pt").string());
  torch::load(disc_coarse_, (fs::path(dir) / "disc_coarse.pt").string());
  torch::load(disc_refined_, (fs::path(dir) / "disc_refined.pt").string());
  torch::load(*opt_g_, (fs::path(dir) / "opt_g.pt").string());
  torch::load(*opt_dc_, (fs::path(dir) / "opt_dc.pt").string());
  torch::load(*opt_dr_, (fs::path(dir) / "opt_dr.pt").string());
  torch::Tensor rng_state;
  torch::load(rng_state, (fs::path(dir) / "rng.pt").string());
  auto gen = at::detail::getDefaultCPUGenerator();
  gen.set_state(rng_state);
  step_ = meta.value("step", 0);
}

torch::Tensor inpaint_with_checkpoint(const std::string& checkpoint_dir,
                                      const torch::Tensor& image, const torch::Tensor& mask) {
  std::ifstream in(fs::path(checkpoint_dir) / "meta.json");
  if (!in) throw std::runtime_error("checkpoint missing meta.json: " + checkpoint_dir);
  json meta = json::parse(in);
  RunConfig cfg = RunConfig::from_json_string(meta.at("config").dump());

  Generator generator(cfg.generator);
  torch::load(generator, (fs::path(checkpoint_dir) / "generator.pt").string());
  generator->eval();
  torch::NoGradGuard ng;

  TORCH_CHECK(image.size(-1) % 32 == 0 && image.size(-2) % 32 == 0,
              "inpaint: image dimensions must be divisible by 32");
  auto img = image.dim() == 3 ? image.unsqueeze(0) : image;
  auto m = mask.dim() == 3 ? mask.unsqueeze(0) : mask;
  auto occluded = compose_occluded(img, m);
  auto out = generator->forward(torch::cat({occluded, m}, 1), m);
  auto composed = compose_discriminator_input(out.refined, occluded, m).clamp(0, 1);
  return image.dim() == 3 ? composed.squeeze(0) : composed;
}

}  // namespace geoinpaint
