// Serial reference vs OpenMP path for the data-parallel kernels.
// Arg 0 = Exec::Serial, 1 = Exec::Parallel.

#include <benchmark/benchmark.h>

#include <vector>

#include "nbtc/eval.h"
#include "nbtc/mlp.h"
#include "nbtc/pyramid.h"
#include "nbtc/qat.h"
#include "nbtc/tilesim.h"
#include "nbtc/trainer.h"

using namespace nbtc;

namespace {

Exec exec_of(const benchmark::State& s) { return s.range(0) ? Exec::Parallel : Exec::Serial; }

void label(benchmark::State& s) { s.SetLabel(s.range(0) ? "parallel" : "serial"); }

void BM_ForwardBatch(benchmark::State& state) {
  MlpDecoder m(32);
  Rng rng(1);
  m.init_uniform(rng);
  const std::size_t n = 1 << 16;
  std::vector<double> x(n * kMlpInputs), y(n * kMlpOutputs);
  for (double& v : x) v = rng.uniform(-1, 1);
  for (auto _ : state) {
    forward_batch(m, x, y, exec_of(state));
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
  label(state);
}
BENCHMARK(BM_ForwardBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_LossAndGradients(benchmark::State& state) {
  const TextureSet ts = make_synthetic_texture_set(128, 128, 5);
  TrainConfig cfg;
  cfg.batch_size = 4096;
  Trainer trainer(ts, cfg);
  const auto batch = trainer.sample_batch();
  for (auto _ : state) benchmark::DoNotOptimize(trainer.loss_and_gradients(batch, exec_of(state)).loss);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
  label(state);
}
BENCHMARK(BM_LossAndGradients)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DecodeTrainable(benchmark::State& state) {
  qat::TrainableLatentTexture t(512, 512, latent_mip_count(512, 512));
  Rng rng(2);
  t.randomize(rng, -3, 3);
  for (auto _ : state) benchmark::DoNotOptimize(qat::decode_trainable(t, 0, qat::QuantMode::Quantized, exec_of(state)));
  label(state);
}
BENCHMARK(BM_DecodeTrainable)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DecodeImage(benchmark::State& state) {
  TrainablePyramid p = TrainablePyramid::create(Variant::A, 256, 256);
  Rng rng(3);
  for (auto& t : p.textures) t.randomize(rng, -2, 2);
  const LatentPyramid lp = p.decode();
  MlpDecoder m(32);
  m.init_uniform(rng);
  for (auto _ : state) benchmark::DoNotOptimize(decode_image(lp, m, 256, 256, 0.5, std::nullopt, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * 256 * 256);
  label(state);
}
BENCHMARK(BM_DecodeImage)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DecodeScreen(benchmark::State& state) {
  TrainablePyramid p = TrainablePyramid::create(Variant::B, 128, 128);
  Rng rng(4);
  for (auto& t : p.textures) t.randomize(rng, -2, 2);
  const LatentPyramid lp = p.decode();
  MlpDecoder m(16);
  m.init_uniform(rng);
  tilesim::AssetMap assets;
  for (int id = 0; id < 4; ++id) assets[id] = {&lp, &m};
  const auto screen = tilesim::make_random_screen(960, 540, 4, 9);
  for (auto _ : state) benchmark::DoNotOptimize(tilesim::decode_screen(screen, assets, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * 960 * 540);
  label(state);
}
BENCHMARK(BM_DecodeScreen)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
