// Command-line frontend: mask synthesis, training, evaluation, inpainting
// and stub-adapter pretraining.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "geoinpaint/adapters.hpp"
#include "geoinpaint/data.hpp"
#include "geoinpaint/mask.hpp"
#include "geoinpaint/metrics.hpp"
#include "geoinpaint/trainer.hpp"

namespace fs = std::filesystem;
using namespace geoinpaint;

namespace {

OcclusionSpec parse_spec(const std::string& s) {
  auto comma = s.find(',');
  if (comma == std::string::npos) throw CLI::ValidationError("--spec expects lo,hi");
  OcclusionSpec spec;
  spec.area_lo = std::stod(s.substr(0, comma));
  spec.area_hi = std::stod(s.substr(comma + 1));
  return spec;
}

int cmd_synthesize_masks(const std::string& seeds_dir, const std::string& spec_str, int count,
                         const std::string& out_dir, std::uint64_t seed, int size) {
  auto pool = load_seed_pool(seeds_dir);
  auto spec = parse_spec(spec_str);
  fs::create_directories(out_dir);
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    auto mask = sample_mask(pool, spec, size, size, rng);
    std::ostringstream name;
    name << "mask_" << std::setw(5) << std::setfill('0') << i << ".png";
    save_mask_png(mask, (fs::path(out_dir) / name.str()).string());
  }
  std::cout << "wrote " << count << " masks to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& config_path) {
  auto cfg = RunConfig::from_json_file(config_path);
  auto adapter = std::make_shared<TaskAdapter>(cfg.adapter);
  Trainer trainer(cfg, adapter);
  trainer.load_data();
  if (!cfg.checkpoint_dir.empty() && fs::exists(fs::path(cfg.checkpoint_dir) / "meta.json")) {
    trainer.load_checkpoint(cfg.checkpoint_dir);
    std::cout << "resumed from step " << trainer.step() << "\n";
  }
  auto before = freeze_check(*adapter);
  while (trainer.step() < cfg.max_steps) {
    auto b = trainer.train_step_auto();
    if (trainer.step() % 50 == 0 || trainer.step() == cfg.max_steps) {
      std::cout << "step " << trainer.step() << " total " << b.total << " l1_r " << b.l1_refined
                << " task " << b.task << "\n";
      if (!cfg.checkpoint_dir.empty()) trainer.save_checkpoint(cfg.checkpoint_dir);
    }
  }
  if (freeze_check(*adapter) != before)
    throw std::runtime_error("task adapter parameters changed during training");
  if (!cfg.checkpoint_dir.empty()) trainer.save_checkpoint(cfg.checkpoint_dir);
  return 0;
}

int cmd_evaluate(const std::string& checkpoint_dir, const std::string& manifest_path,
                 const std::string& mode_str, const std::string& report_path) {
  std::ifstream meta_in(fs::path(checkpoint_dir) / "meta.json");
  if (!meta_in) throw std::runtime_error("checkpoint missing meta.json: " + checkpoint_dir);
  std::stringstream ss;
  ss << meta_in.rdbuf();
  auto meta = nlohmann::json::parse(ss.str());
  auto cfg = RunConfig::from_json_string(meta.at("config").dump());
  cfg.manifest_path = manifest_path;

  auto adapter = std::make_shared<TaskAdapter>(cfg.adapter);
  Trainer trainer(cfg, adapter);
  trainer.load_checkpoint(checkpoint_dir);
  trainer.load_data();

  EvalMode mode = EvalMode::reconstruction;
  if (mode_str == "occluded") mode = EvalMode::occluded_baseline;
  else if (mode_str == "clean") mode = EvalMode::clean;
  else if (mode_str != "reconstruction") throw CLI::ValidationError("unknown --mode");

  auto report = trainer.evaluate_manifest(mode);
  std::cout << report.to_json() << "\n";
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    out << report.to_json() << "\n";
    std::ofstream csv(report_path + ".csv");
    csv << report.to_csv_row();
  }
  return 0;
}

int cmd_inpaint(const std::string& checkpoint_dir, const std::string& image_path,
                const std::string& mask_path, const std::string& out_path) {
  auto image = load_image(image_path);
  auto mask = mask_to_tensor(load_mask_png(mask_path));
  auto result = inpaint_with_checkpoint(checkpoint_dir, image, mask);
  save_image(result, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_train_stub(const std::string& manifest_path, int num_classes, int image_size, int steps,
                   std::uint64_t seed, const std::string& out_path) {
  auto manifest = load_manifest(manifest_path);
  std::vector<Sample> samples;
  for (const auto& rec : manifest.records) {
    if (rec.split != Split::train) continue;
    Sample s;
    s.clean = load_image(rec.image);
    s.mask = torch::zeros({1, s.clean.size(1), s.clean.size(2)});
    s.occluded = s.clean.clone();
    s.class_id = rec.class_id;
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw std::runtime_error("train-stub: no train records");
  auto batch = make_batch(samples, image_size);

  AdapterConfig acfg;
  acfg.kind = TaskKind::test_stub;
  acfg.num_classes = num_classes;
  acfg.init_seed = seed;
  TaskAdapter adapter(acfg);
  double final_loss = train_stub_adapter(adapter, batch, steps);
  adapter.save_weights(out_path);
  std::cout << "stub trained, final loss " << final_loss << ", weights at " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-driven occlusion inpainting for geoscience imagery"};
  app.require_subcommand(1);

  // synthesize-masks
  std::string seeds_dir, spec_str = "0.15,0.60", out_dir;
  int count = 100, size = 256;
  std::uint64_t seed = 0;
  auto* synth = app.add_subcommand("synthesize-masks", "Generate occlusion masks from a seed pool");
  synth->add_option("--seeds", seeds_dir)->required();
  synth->add_option("--spec", spec_str, "area ratio bounds lo,hi");
  synth->add_option("--count", count);
  synth->add_option("--out", out_dir)->required();
  synth->add_option("--seed", seed);
  synth->add_option("--size", size);

  // train
  std::string config_path;
  auto* train = app.add_subcommand("train", "Train from a JSON run config");
  train->add_option("--config", config_path)->required();

  // evaluate
  std::string checkpoint_dir, manifest_path, mode_str = "reconstruction", report_path;
  auto* eval = app.add_subcommand("evaluate", "Evaluate a checkpoint on a manifest's test split");
  eval->add_option("--checkpoint", checkpoint_dir)->required();
  eval->add_option("--manifest", manifest_path)->required();
  eval->add_option("--mode", mode_str, "reconstruction | occluded | clean");
  eval->add_option("--report", report_path);

  // inpaint
  std::string image_path, mask_path, out_path;
  auto* inp = app.add_subcommand("inpaint", "Reconstruct one occluded image");
  inp->add_option("--checkpoint", checkpoint_dir)->required();
  inp->add_option("--image", image_path)->required();
  inp->add_option("--mask", mask_path)->required();
  inp->add_option("--out", out_path)->required();

  // train-stub
  std::string stub_out = "stub_adapter.pt";
  int num_classes = 7, stub_steps = 300, stub_size = 64;
  auto* stub = app.add_subcommand("train-stub", "Pretrain the stand-in classifier on clean images");
  stub->add_option("--manifest", manifest_path)->required();
  stub->add_option("--num-classes", num_classes);
  stub->add_option("--image-size", stub_size);
  stub->add_option("--steps", stub_steps);
  stub->add_option("--seed", seed);
  stub->add_option("--out", stub_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return cmd_synthesize_masks(seeds_dir, spec_str, count, out_dir, seed, size);
    if (train->parsed()) return cmd_train(config_path);
    if (eval->parsed()) return cmd_evaluate(checkpoint_dir, manifest_path, mode_str, report_path);
    if (inp->parsed()) return cmd_inpaint(checkpoint_dir, image_path, mask_path, out_path);
    if (stub->parsed())
      return cmd_train_stub(manifest_path, num_classes, stub_size, stub_steps, seed, stub_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
