#include <benchmark/benchmark.h>

#include "geoinpaint/mask.hpp"
#include "geoinpaint/metrics.hpp"
#include "geoinpaint/model.hpp"

using namespace geoinpaint;

namespace {

OcclusionMask random_mask(int h, int w, double density, std::uint64_t seed) {
  Rng rng(seed);
  std::bernoulli_distribution bit(density);
  OcclusionMask m(h, w);
  for (auto& v : m.grid) v = bit(rng) ? 1 : 0;
  return m;
}

void BM_MaskMix(benchmark::State& state) {
  auto seed = random_mask(256, 256, 0.3, 1);
  MixConfig cfg;
  Rng rng(7);
  for (auto _ : state) benchmark::DoNotOptimize(maskmix(seed, cfg, rng));
}
BENCHMARK(BM_MaskMix);

void BM_ApplyRotate(benchmark::State& state) {
  auto mask = random_mask(256, 256, 0.3, 2);
  auto op = AugmentOp::rotate(37.0);
  for (auto _ : state) benchmark::DoNotOptimize(apply_op(mask, op));
}
BENCHMARK(BM_ApplyRotate);

void BM_Psnr(benchmark::State& state) {
  torch::manual_seed(0);
  auto a = torch::rand({3, 256, 256});
  auto b = torch::rand({3, 256, 256});
  for (auto _ : state) benchmark::DoNotOptimize(psnr(a, b));
}
BENCHMARK(BM_Psnr);

void BM_Ssim(benchmark::State& state) {
  torch::manual_seed(0);
  auto a = torch::rand({3, 256, 256});
  auto b = torch::rand({3, 256, 256});
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim);

void BM_GeneratorForward256(benchmark::State& state) {
  torch::NoGradGuard ng;
  torch::manual_seed(0);
  Generator gen(GeneratorConfig{});
  gen->eval();
  auto mask = torch::zeros({1, 1, 256, 256});
  auto input = torch::cat({torch::rand({1, 3, 256, 256}), mask}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(gen->forward(input, mask).refined);
}
BENCHMARK(BM_GeneratorForward256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
