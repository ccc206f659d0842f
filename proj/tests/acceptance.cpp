// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Run with --only N to execute a single criterion.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <string>
#include <vector>

#include "nbtc/bc1.h"
#include "nbtc/eval.h"
#include "nbtc/mlp.h"
#include "nbtc/qat.h"
#include "nbtc/tilesim.h"
#include "nbtc/trainer.h"
#include "oracles.h"
#include "reference_bc1.h"

using namespace nbtc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- 1. BC1 bit-exactness

Outcome criterion_bc1() {
  const auto t0 = Clock::now();
  Rng rng(101);
  std::size_t mismatches = 0;
  int blocks = 0;
  while (blocks < 100000) {
    std::array<std::uint8_t, 8> bytes;
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.next());
    const bc1::Block block = bc1::parse(bytes);
    if (!block.four_color()) continue;
    ++blocks;
    const bc1::DecodedBlock ours = bc1::decode_block(block);
    const ref_bc1::Texels ref = ref_bc1::decode(bytes);
    if (!ref.ok) {
      ++mismatches;
      continue;
    }
    for (int t = 0; t < 16; ++t)
      for (int c = 0; c < 3; ++c)
        if (std::abs(ours.texels[t][c] - ref.rgb[t][c]) > 1e-12) ++mismatches;
  }

  int roundtrip_failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const int w = 4 << rng.below(4), h = 4 << rng.below(4);
    qat::TrainableLatentTexture t(w, h, latent_mip_count(w, h));
    t.randomize(rng, -5.0, 5.0);
    const qat::BlockChain chain = qat::export_to_bc1(t);
    const LatentChain decoded = qat::decode_blocks(chain, w, h);
    for (int l = 0; l < t.mip_count(); ++l) {
      if (!(decoded[l] == qat::decode_trainable(t, l))) {
        ++roundtrip_failures;
        break;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && roundtrip_failures == 0 && secs < 10.0,
          fmt("%d blocks, %zu texel mismatches; 1000 export round trips, %d failures; %.2f s (limit 10 s)", blocks,
              mismatches, roundtrip_failures, secs)};
}

// ---- 2. Gradient fidelity

Outcome criterion_gradients() {
  const auto t0 = Clock::now();
  Rng rng(202);
  double worst_mlp = 0.0, worst_pipeline = 0.0;
  const TextureSet ts = make_synthetic_texture_set(32, 32, 7);

  for (int trial = 0; trial < 100; ++trial) {
    // MLP alone: every parameter and input.
    {
      MlpDecoder m(std::array<int, 3>{16, 32, 64}[trial % 3], 1 + trial % 2);
      m.init_uniform(rng);
      for (int l = 0; l < m.layer_count(); ++l)
        for (int o = 0; o < m.layer(l).outputs; ++o) m.params()[m.layer(l).bias + o] = rng.uniform(-0.2, 0.2);
      MlpInput x;
      for (double& v : x) v = rng.uniform(-1, 1);
      MlpOutput target;
      for (double& v : target) v = rng.uniform(-1, 1);
      const auto loss = [&] {
        const MlpOutput y = forward(m, x);
        double s = 0.0;
        for (int o = 0; o < kMlpOutputs; ++o) s += std::abs(y[o] - target[o]);
        return s;
      };
      MlpCache cache;
      const MlpOutput y = forward(m, x, cache);
      MlpOutput up;
      for (int o = 0; o < kMlpOutputs; ++o) up[o] = y[o] > target[o] ? 1.0 : -1.0;
      std::vector<double> g(m.param_count(), 0.0);
      std::array<double, kMlpInputs> gx{};
      backward(m, cache, up, g, gx);
      std::vector<double> analytic = g, numeric = oracle::central_differences(m.params(), loss);
      const auto fdx = oracle::central_differences(x, loss);
      analytic.insert(analytic.end(), gx.begin(), gx.end());
      numeric.insert(numeric.end(), fdx.begin(), fdx.end());
      worst_mlp = std::max(worst_mlp, oracle::relative_error(analytic, numeric));
    }
    // Full pipeline on the smooth path: MLP, trilinear, bilinear, sigmoid.
    {
      TrainConfig cfg;
      cfg.variant = trial % 2 ? Variant::B : Variant::A;
      cfg.hidden_dim = std::array<int, 3>{16, 32, 64}[trial % 3];
      cfg.batch_size = 32;
      cfg.seed = 1000 + trial;
      cfg.quant_mode = qat::QuantMode::Smooth;
      cfg.exec = Exec::Serial;
      Trainer trainer(ts, cfg);
      for (int s = 0; s < 2; ++s) trainer.step();
      const auto batch = trainer.sample_batch();
      const BatchGradients g = trainer.loss_and_gradients(batch, Exec::Serial);
      const auto loss = [&] { return trainer.loss_and_gradients(batch, Exec::Serial).loss; };

      std::vector<double> analytic, numeric;
      const auto check = [&](std::span<double> params, std::span<const double> grad, std::size_t i) {
        const double keep = params[i];
        params[i] = keep + 1e-6;
        const double fp = loss();
        params[i] = keep - 1e-6;
        const double fm = loss();
        params[i] = keep;
        analytic.push_back(grad[i]);
        numeric.push_back((fp - fm) / 2e-6);
      };
      auto mp = trainer.mlp().params();
      for (int j = 0; j < 16; ++j) check(mp, g.mlp, rng.below(mp.size()));
      for (int k = 0; k < kLatentTextures; ++k) {
        auto lp = trainer.latents().textures[k].params();
        std::vector<std::size_t> touched;
        for (std::size_t i = 0; i < lp.size(); ++i)
          if (g.latent[k][i] != 0.0) touched.push_back(i);
        for (int j = 0; j < 6 && !touched.empty(); ++j) check(lp, g.latent[k], touched[rng.below(touched.size())]);
        for (int j = 0; j < 2; ++j) check(lp, g.latent[k], rng.below(lp.size()));
      }
      worst_pipeline = std::max(worst_pipeline, oracle::relative_error(analytic, numeric));
    }
  }
  const double secs = seconds_since(t0);
  return {worst_mlp < 1e-3 && worst_pipeline < 1e-3 && secs < 60.0,
          fmt("100 trials; worst rel. err MLP %.2e, pipeline %.2e (limit 1e-3); %.1f s (limit 60 s)", worst_mlp,
              worst_pipeline, secs)};
}

// ---- 3. Quantizer contract

Outcome criterion_quantizer() {
  Rng rng(303);
  std::size_t idempotence = 0, grid = 0, ste = 0, inputs = 0;
  for (int i = 0; i < 1000000; ++i) {
    const double x = rng.uniform(-0.25, 1.25);
    for (int bits : {2, 5, 6}) {
      const double levels = (1 << bits) - 1;
      const double q = qat::quant(x, bits);
      if (qat::quant(q, bits) != q) ++idempotence;
      const double k = q * levels;
      if (k != std::round(k) || k < 0 || k > levels) ++grid;
      // Nearest grid point (ties away from zero) of the clamped input.
      const double c = std::clamp(x, 0.0, 1.0);
      if (std::abs(c - q) > 0.5 / levels + 1e-15) ++grid;
    }
    ++inputs;
  }
  // Straight-through: the backward pass of the quantized decode equals the
  // analytic gradient of the smooth path. One 4x4 texture carries 22 raw
  // inputs (6 endpoint channels + 16 alphas).
  const int textures = 1000000 / 22 + 1;
  for (int t = 0; t < textures; ++t) {
    qat::TrainableLatentTexture tex(4, 4, 1);
    tex.randomize(rng, -6.0, 6.0);
    std::vector<double> up(48);
    for (double& u : up) u = rng.uniform(-1, 1);
    std::vector<double> g(tex.params().size(), 0.0);
    qat::decode_trainable_backward(tex, 0, up, g);
    const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    const auto e0 = tex.endpoint0(0), e1 = tex.endpoint1(0), al = tex.alpha(0);
    const auto& m = tex.mip(0);
    for (int c = 0; c < 3; ++c) {
      const double s0 = sig(e0[c]), s1 = sig(e1[c]);
      double w0 = 0.0, w1 = 0.0;
      for (int p = 0; p < 16; ++p) {
        const double a = sig(al[p]);
        w0 += up[3 * p + c] * (1 - a);
        w1 += up[3 * p + c] * a;
      }
      if (std::abs(g[m.endpoint0 + c] - w0 * s0 * (1 - s0)) > 1e-12) ++ste;
      if (std::abs(g[m.endpoint1 + c] - w1 * s1 * (1 - s1)) > 1e-12) ++ste;
    }
    for (int p = 0; p < 16; ++p) {
      const double a = sig(al[p]);
      double d = 0.0;
      for (int c = 0; c < 3; ++c) d += up[3 * p + c] * (sig(e1[c]) - sig(e0[c]));
      if (std::abs(g[m.alpha + p] - d * a * (1 - a)) > 1e-12) ++ste;
    }
  }
  return {idempotence == 0 && grid == 0 && ste == 0,
          fmt("%zu quant inputs x 3 bit widths: %zu idempotence, %zu grid violations; %d x 22 STE inputs: %zu "
              "mismatches",
              inputs, idempotence, grid, textures, ste)};
}

// ---- 4. Training convergence

double moving_average(const std::vector<TrainLogEntry>& log, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = end - 500; i < end; ++i) s += log[i].loss;
  return s / 500.0;
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

Outcome criterion_training(int steps, int batch) {
  const auto t0 = Clock::now();
  std::string detail;
  bool ok = true;

  {
    const FeatureVector value = {0.8, 0.45, 0.3, 0.5, 0.5, 1.0, 0.6, 0.0, 0.9};
    const TextureSet ts = make_constant_texture_set(64, 64, value);
    TrainConfig cfg;
    cfg.hidden_dim = 16;
    cfg.steps = 500;
    cfg.batch_size = batch;
    const TrainResult r = train(ts, cfg);
    const double p = evaluate_asset(r.pyramid, r.mlp, ts, 0.0, std::nullopt, Exec::Parallel).aggregate_psnr;
    ok = ok && p >= 45.0;
    detail += fmt("(a) constant set %.2f dB (>= 45); ", p);
  }

  const TextureSet ts = make_synthetic_texture_set(128, 128, 2024);
  struct Run {
    Variant variant;
    int d;
    std::vector<double> psnr;
  };
  std::vector<Run> runs = {{Variant::A, 32, {}}, {Variant::A, 16, {}}, {Variant::A, 64, {}}, {Variant::B, 32, {}}};
  bool converged = true;
  std::string conv;
  for (Run& run : runs) {
    for (std::uint64_t seed : {1, 2, 3}) {
      TrainConfig cfg;
      cfg.variant = run.variant;
      cfg.hidden_dim = run.d;
      cfg.steps = steps;
      cfg.batch_size = batch;
      cfg.seed = seed;
      const TrainResult r = train(ts, cfg);
      run.psnr.push_back(evaluate_asset(r.pyramid, r.mlp, ts, 0.0, std::nullopt, Exec::Parallel).aggregate_psnr);
      if (run.variant == Variant::A && run.d == 32) {
        const double early = moving_average(r.log, 500);
        const double late = moving_average(r.log, r.log.size());
        converged = converged && late < early;
        conv += fmt("%.4f->%.4f ", early, late);
      }
    }
  }
  ok = ok && converged;
  detail += "(b) varA D32 loss MA@500 -> final: " + conv + "; ";
  const double a32 = median3(runs[0].psnr), a16 = median3(runs[1].psnr), a64 = median3(runs[2].psnr),
               b32 = median3(runs[3].psnr);
  ok = ok && a64 >= a16 && a32 >= b32;
  detail += fmt("(c) median PSNR D64 %.2f vs D16 %.2f, varA %.2f vs varB %.2f; ", a64, a16, a32, b32);
  const double secs = seconds_since(t0);
  ok = ok && secs < 900.0;
  detail += fmt("%d steps x batch %d; %.0f s (limit 900 s)", steps, batch, secs);
  return {ok, detail};
}

// ---- 5. Footprint accounting

Outcome criterion_footprint() {
  const Footprint a = footprint(Variant::A, 4096, 4096, 32, false, false);
  const Footprint b = footprint(Variant::B, 4096, 4096, 32, false, false);
  const bool ok = a.total_bits_per_texel == Rational(10) && a.compression_ratio == Rational(36, 5) &&
                  b.total_bits_per_texel == Rational(85, 16) && b.compression_ratio == Rational(1152, 85) &&
                  a.reference_bits_per_texel == Rational(72);
  return {ok, fmt("varA %lld/%lld bits/texel ratio %lld/%lld; varB %lld/%lld bits/texel ratio %lld/%lld (%.4f)",
                  (long long)a.total_bits_per_texel.num(), (long long)a.total_bits_per_texel.den(),
                  (long long)a.compression_ratio.num(), (long long)a.compression_ratio.den(),
                  (long long)b.total_bits_per_texel.num(), (long long)b.total_bits_per_texel.den(),
                  (long long)b.compression_ratio.num(), (long long)b.compression_ratio.den(),
                  b.compression_ratio.to_double())};
}

// ---- 6. Anisotropic reduction

Outcome criterion_aniso(int steps, int batch) {
  const TextureSet ts = make_synthetic_texture_set(128, 128, 606);
  TrainConfig cfg;
  cfg.steps = steps;
  cfg.batch_size = batch;
  const TrainResult r = train(ts, cfg);
  bool identical = true;
  for (double lod : {0.0, 1.0, 2.5}) {
    const Image iso = decode_image(r.pyramid, r.mlp, 128, 128, lod, std::nullopt, Exec::Parallel);
    const Image one = decode_image(r.pyramid, r.mlp, 128, 128, lod, AnisoSpec{0.03, 0.01, 1}, Exec::Parallel);
    identical = identical && iso == one;
  }
  const double iso = evaluate_asset(r.pyramid, r.mlp, ts, 0.0, std::nullopt, Exec::Parallel).aggregate_psnr;
  // 4:1 footprint along u at the finest level: 4 taps one texel apart.
  const AnisoSpec spec{4.0 / 128.0, 0.0, 4};
  const double an = evaluate_asset(r.pyramid, r.mlp, ts, 0.0, spec, Exec::Parallel).aggregate_psnr;
  const AnisoSpec diag{3.0 / 128.0, 3.0 / 128.0, 8};
  const double an2 = evaluate_asset(r.pyramid, r.mlp, ts, 1.0, diag, Exec::Parallel).aggregate_psnr;
  const double iso2 = evaluate_asset(r.pyramid, r.mlp, ts, 1.0, std::nullopt, Exec::Parallel).aggregate_psnr;
  const bool ok = identical && an >= iso - 3.0 && an2 >= iso2 - 3.0;
  return {ok, fmt("taps=1 bit-identical: %s; lod0 iso %.2f dB vs 4-tap aniso %.2f dB; lod1 iso %.2f dB vs 8-tap "
                  "diagonal %.2f dB (gate: within 3 dB)",
                  identical ? "yes" : "no", iso, an, iso2, an2)};
}

// ---- 7. Tile simulator

Outcome criterion_tilesim() {
  const auto t0 = Clock::now();
  std::vector<LatentPyramid> pyramids;
  std::vector<MlpDecoder> mlps;
  for (int id = 0; id < 4; ++id) {
    TrainablePyramid p = TrainablePyramid::create(id % 2 ? Variant::B : Variant::A, 64, 64);
    Rng rng(700 + id);
    for (auto& t : p.textures) t.randomize(rng, -2.0, 2.0);
    pyramids.push_back(p.decode());
    MlpDecoder m(std::array<int, 4>{16, 32, 64, 16}[id]);
    m.init_uniform(rng);
    mlps.push_back(m);
  }
  tilesim::AssetMap assets;
  for (int id = 0; id < 4; ++id) assets[id] = {&pyramids[id], &mlps[id]};

  Rng rng(707);
  std::size_t oracle_mismatch = 0, conservation = 0, mixed_batches = 0, permutation = 0, total_pixels = 0;
  for (int i = 0; i < 1000; ++i) {
    int w, h;
    if (i < 2) {
      w = 1920;
      h = 1080;
    } else {
      w = 1 + static_cast<int>(rng.below(480));
      h = 1 + static_cast<int>(rng.below(270));
    }
    const auto screen = tilesim::make_random_screen(w, h, 1 + static_cast<int>(rng.below(4)), 7000 + i);
    const auto r = tilesim::decode_screen(screen, assets, Exec::Parallel, true);
    const auto oracle = tilesim::decode_screen_per_pixel(screen, assets);
    if (!(r.buffer == oracle)) ++oracle_mismatch;

    std::size_t neural = 0;
    for (int y = 0; y < screen.padded_height(); ++y)
      for (int x = 0; x < screen.padded_width(); ++x) neural += screen.at(x, y).material != tilesim::kNoMaterial;
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(screen.padded_width()) * screen.padded_height(), 0);
    std::size_t decoded = 0;
    for (const auto& inv : r.trace) {
      if (inv.pixels.size() > static_cast<std::size_t>(tilesim::kTilePixels)) ++mixed_batches;
      for (const auto& p : inv.pixels) {
        if (screen.at(p.x, p.y).material != inv.material) ++mixed_batches;
        auto& s = seen[static_cast<std::size_t>(p.y) * screen.padded_width() + p.x];
        if (s++) ++conservation;
        ++decoded;
      }
    }
    if (decoded != neural || r.stats.decoded_pixels != neural) ++conservation;
    // Splat-back: a pixel is covered exactly where it is neural.
    for (int y = 0; y < screen.padded_height(); ++y)
      for (int x = 0; x < screen.padded_width(); ++x) {
        const std::size_t at = static_cast<std::size_t>(y) * screen.padded_width() + x;
        const bool is_neural = screen.at(x, y).material != tilesim::kNoMaterial;
        if (static_cast<bool>(r.buffer.covered[at]) != is_neural || static_cast<bool>(seen[at]) != is_neural)
          ++permutation;
      }
    total_pixels += static_cast<std::size_t>(w) * h;
  }
  const double secs = seconds_since(t0);
  const bool ok = oracle_mismatch == 0 && conservation == 0 && mixed_batches == 0 && permutation == 0 && secs < 120.0;
  return {ok, fmt("1000 screens (%zu pixels, two at 1920x1080): %zu oracle mismatches, %zu conservation, %zu "
                  "mixed-MLP batches, %zu splat errors; %.1f s (limit 120 s)",
                  total_pixels, oracle_mismatch, conservation, mixed_batches, permutation, secs)};
}

// ---- 8. Determinism of compress

int run(const std::string& cmd) { return std::system(cmd.c_str()); }

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome criterion_determinism(const std::string& cli, const fs::path& work) {
  if (cli.empty()) return {false, "no --cli given"};
  fs::create_directories(work);
  const fs::path in = work / "maps";
  if (run("\"" + cli + "\" synth --size 64 64 --seed 8 --out-dir \"" + in.string() + "\" > /dev/null") != 0)
    return {false, "synth failed"};
  std::string maps;
  for (const char* m : {"albedo", "normal", "roughness", "metalness", "ao"})
    maps += std::string(" --") + m + " \"" + (in / (std::string(m) + ".png")).string() + "\"";
  const auto compress = [&](const fs::path& out) {
    return run("\"" + cli + "\" compress" + maps + " --steps 60 --batch 1024 --seed 17 --out \"" + out.string() +
               "\" > /dev/null");
  };
  if (compress(work / "run1.nbtc") != 0 || compress(work / "run2.nbtc") != 0) return {false, "compress failed"};
  const auto a = slurp(work / "run1.nbtc"), b = slurp(work / "run2.nbtc");
  return {!a.empty() && a == b, fmt("two compress runs, seed 17: %zu and %zu bytes, %s", a.size(), b.size(),
                                    a == b ? "byte-identical" : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string cli;
  std::string workdir = (fs::temp_directory_path() / "nbtc_acceptance").string();
  int only = 0;
  int steps = 5000;
  int batch = 2048;
  app.add_option("--cli", cli, "path to the nbtc executable");
  app.add_option("--workdir", workdir, "scratch directory");
  app.add_option("--only", only, "run a single criterion (1-8)");
  app.add_option("--steps", steps, "training steps for criterion 4")->capture_default_str();
  app.add_option("--batch", batch, "training batch for criteria 4 and 6")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  configure_threads_from_env();

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> all = {
      {1, "BC1 bit-exactness", criterion_bc1},
      {2, "gradient fidelity", criterion_gradients},
      {3, "quantizer contract", criterion_quantizer},
      {4, "training convergence", [&] { return criterion_training(steps, batch); }},
      {5, "footprint accounting", criterion_footprint},
      {6, "anisotropic reduction", [&] { return criterion_aniso(2000, batch); }},
      {7, "tile simulator", criterion_tilesim},
      {8, "determinism", [&] { return criterion_determinism(cli, workdir); }},
  };
  int failed = 0;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
