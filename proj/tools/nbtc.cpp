// nbtc: compress / decompress / eval / tilesim front end, plus generators for
// synthetic inputs used by the tests.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nbtc/container.h"
#include "nbtc/error.h"
#include "nbtc/eval.h"
#include "nbtc/parallel.h"
#include "nbtc/tilesim.h"
#include "nbtc/trainer.h"

namespace fs = std::filesystem;
using namespace nbtc;

namespace {

enum Exit { kOk = 0, kInput = 1, kDiverged = 2, kIo = 3 };

struct MapFlags {
  std::string albedo, normal, roughness, metalness, ao;

  void add(CLI::App* cmd, bool required) {
    cmd->add_option("--albedo", albedo, "albedo RGB map (PNG)")->required(required);
    cmd->add_option("--normal", normal, "normal XYZ map (PNG)")->required(required);
    cmd->add_option("--roughness", roughness, "roughness map (PNG, channel 0)")->required(required);
    cmd->add_option("--metalness", metalness, "metalness map (PNG, channel 0)")->required(required);
    cmd->add_option("--ao", ao, "ambient occlusion map (PNG, channel 0)")->required(required);
  }
  TextureSetPaths paths() const { return {albedo, normal, roughness, metalness, ao}; }
};

std::optional<AnisoSpec> parse_aniso(const std::string& axis, int taps) {
  if (axis.empty()) return std::nullopt;
  AnisoSpec spec;
  char comma = 0;
  std::istringstream in(axis);
  if (!(in >> spec.axis_u >> comma >> spec.axis_v) || comma != ',' || !in.eof()) {
    throw InputError("--aniso expects two numbers as u,v (got \"" + axis + "\")");
  }
  if (taps < 1) throw InputError("--taps must be >= 1");
  spec.taps = taps;
  return spec;
}

void print_footprint(const NbtcFile& f) {
  const Footprint fp = footprint(f.latents.variant, f.latents.width, f.latents.height, f.hidden_dim,
                                 false, true, f.hidden_layers);
  std::printf("bits_per_texel: %.6f\n", fp.total_bits_per_texel.to_double());
  std::printf("compression_ratio: %.4f\n", fp.compression_ratio.to_double());
}

// ---- compress

struct CompressArgs {
  MapFlags maps;
  std::string variant = "A";
  int hidden_dim = 32;
  int steps = 1000;
  int batch = 1 << 14;
  std::uint64_t seed = 1;
  std::string out;
  std::string log;
};

int run_compress(const CompressArgs& a) {
  const auto variant = parse_variant(a.variant);
  if (!variant) throw InputError("--variant must be A or B (got \"" + a.variant + "\")");
  const TextureSet ts = import_texture_set(a.maps.paths());

  TrainConfig cfg;
  cfg.variant = *variant;
  cfg.hidden_dim = a.hidden_dim;
  cfg.steps = a.steps;
  cfg.batch_size = a.batch;
  cfg.seed = a.seed;

  std::ofstream log_file;
  if (!a.log.empty()) {
    log_file.open(a.log);
    if (!log_file) throw IoError("cannot write " + a.log);
  }
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult r = train(ts, cfg, a.log.empty() ? nullptr : &log_file);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const NbtcFile file = make_nbtc(r.compressed, r.mlp);
  save_nbtc(a.out, file);
  // Report quality of what was actually written (32-bit weights).
  const EvalReport report = evaluate_asset(r.pyramid, mlp_from_nbtc(file), ts, 0.0, std::nullopt, Exec::Parallel);
  std::printf("psnr: %.4f\n", report.aggregate_psnr);
  print_footprint(file);
  std::printf("train_seconds: %.3f\n", seconds);
  std::printf("degenerate_blocks: %zu/%zu\n", r.export_stats.degenerate_blocks, r.export_stats.blocks);
  return kOk;
}

// ---- decompress

struct DecompressArgs {
  std::string in;
  double lod = 0.0;
  std::string out_dir;
  std::string aniso;
  int taps = 4;
};

int run_decompress(const DecompressArgs& a) {
  const NbtcFile f = load_nbtc(a.in);
  const LatentPyramid p = f.latents.decode();
  const MlpDecoder mlp = mlp_from_nbtc(f);
  const Image img = decode_image(p, mlp, p.width, p.height, a.lod, parse_aniso(a.aniso, a.taps), Exec::Parallel);
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw IoError("cannot create " + a.out_dir + ": " + ec.message());
  export_feature_images(a.out_dir, img);
  std::printf("wrote %dx%d maps to %s\n", img.width, img.height, a.out_dir.c_str());
  return kOk;
}

// ---- eval

struct EvalArgs {
  std::string in;
  MapFlags maps;
  double lod = 0.0;
  bool per_lod = false;
  std::string csv;
  std::string aniso;
  int taps = 4;
};

int run_eval(const EvalArgs& a) {
  const NbtcFile f = load_nbtc(a.in);
  const TextureSet ts = import_texture_set(a.maps.paths());
  if (ts.width() != f.latents.width || ts.height() != f.latents.height) {
    throw InputError("reference maps are " + std::to_string(ts.width()) + "x" + std::to_string(ts.height()) +
                     " but the asset is " + std::to_string(f.latents.width) + "x" +
                     std::to_string(f.latents.height));
  }
  const LatentPyramid p = f.latents.decode();
  const MlpDecoder mlp = mlp_from_nbtc(f);
  const auto aniso = parse_aniso(a.aniso, a.taps);

  std::vector<double> lods;
  if (a.per_lod) {
    for (int l = 0; l < ts.mip_count(); ++l) lods.push_back(l);
  } else {
    lods.push_back(a.lod);
  }
  std::vector<EvalReport> reports;
  for (double lod : lods) {
    reports.push_back(evaluate_asset(p, mlp, ts, lod, aniso, Exec::Parallel));
    write_report(std::cout, reports.back());
  }
  if (a.per_lod) {
    double sum = 0.0;
    for (const auto& r : reports) sum += r.aggregate_psnr;
    std::printf("psnr_mean_over_lods: %.6f\n", sum / static_cast<double>(reports.size()));
  }
  print_footprint(f);
  if (!a.csv.empty()) {
    std::ofstream out(a.csv);
    if (!out) throw IoError("cannot write " + a.csv);
    write_report_csv(out, reports);
  }
  return kOk;
}

// ---- tilesim

struct TilesimArgs {
  std::string screen;
  std::vector<std::string> assets;
  std::string stats;
  std::string out;
  bool serial = false;
};

int run_tilesim(const TilesimArgs& a) {
  const tilesim::MaterialScreen screen = tilesim::load_screen(a.screen);
  std::map<std::int32_t, NbtcFile> files;
  std::map<std::int32_t, LatentPyramid> pyramids;
  std::map<std::int32_t, MlpDecoder> mlps;
  tilesim::AssetMap assets;
  for (const std::string& spec : a.assets) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("--assets entries look like id=file.nbtc (got \"" + spec + "\")");
    std::int32_t id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(spec.substr(0, eq), &used);
      if (used != eq || id < 0) throw std::invalid_argument("id");
    } catch (const std::exception&) {
      throw InputError("bad material id in \"" + spec + "\"");
    }
    files[id] = load_nbtc(spec.substr(eq + 1));
    pyramids[id] = files[id].latents.decode();
    mlps[id] = mlp_from_nbtc(files[id]);
    assets[id] = {&pyramids[id], &mlps[id]};
  }

  const auto t0 = std::chrono::steady_clock::now();
  const tilesim::DecodeResult r = tilesim::decode_screen(screen, assets, a.serial ? Exec::Serial : Exec::Parallel);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  tilesim::write_stats(std::cout, r.stats);
  std::printf("decode_seconds: %.4f\n", seconds);
  if (!a.stats.empty()) {
    std::ofstream out(a.stats);
    if (!out) throw IoError("cannot write " + a.stats);
    tilesim::write_stats(out, r.stats);
  }
  if (!a.out.empty()) {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw IoError("cannot write " + a.out);
    tilesim::save_feature_buffer(out, r.buffer);
  }
  return kOk;
}

// ---- generators

struct SynthArgs {
  std::pair<int, int> size{128, 128};
  std::uint64_t seed = 1;
  std::string out_dir;
};

int run_synth(const SynthArgs& a) {
  const auto [w, h] = a.size;
  if (w <= 0 || h <= 0) throw InputError("--size must be positive");
  const TextureSet ts = make_synthetic_texture_set(w, h, a.seed);
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw IoError("cannot create " + a.out_dir + ": " + ec.message());
  export_feature_images(a.out_dir, ts.mip(0));
  std::printf("wrote %dx%d synthetic maps to %s\n", w, h, a.out_dir.c_str());
  return kOk;
}

struct ScreenArgs {
  std::pair<int, int> size{1920, 1080};
  int materials = 4;
  std::uint64_t seed = 1;
  bool binary = false;
  std::string out;
};

int run_screen(const ScreenArgs& a) {
  const auto [w, h] = a.size;
  if (w <= 0 || h <= 0 || a.materials < 1) throw InputError("screen size and material count must be positive");
  const auto s = tilesim::make_random_screen(w, h, a.materials, a.seed);
  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw IoError("cannot write " + a.out);
  if (a.binary) {
    tilesim::save_screen_binary(out, s);
  } else {
    tilesim::save_screen_text(out, s);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  configure_threads_from_env();

  CLI::App app{"Neural block texture compression: BC1 latent pyramids decoded by a small MLP.\n"
               "Set NBTC_THREADS to cap worker threads (0 = runtime default)."};
  app.require_subcommand(1);

  CompressArgs ca;
  auto* compress = app.add_subcommand("compress", "train latents + decoder for a texture set and write .nbtc");
  ca.maps.add(compress, true);
  compress->add_option("--variant", ca.variant, "latent layout, A or B")->capture_default_str();
  compress->add_option("--hidden-dim", ca.hidden_dim, "decoder hidden width")
      ->check(CLI::IsMember({16, 32, 64}))
      ->capture_default_str();
  compress->add_option("--steps", ca.steps, "training steps")->check(CLI::NonNegativeNumber)->capture_default_str();
  compress->add_option("--batch", ca.batch, "samples per step")->check(CLI::PositiveNumber)->capture_default_str();
  compress->add_option("--seed", ca.seed, "random seed")->capture_default_str();
  compress->add_option("--log", ca.log, "write 'step loss lr_mlp lr_latent' lines here");
  compress->add_option("--out", ca.out, "output .nbtc")->required();

  DecompressArgs da;
  auto* decompress = app.add_subcommand("decompress", "decode an .nbtc to PNG maps at one LOD");
  decompress->add_option("--in", da.in, "input .nbtc")->required();
  decompress->add_option("--lod", da.lod, "level of detail")->check(CLI::NonNegativeNumber)->capture_default_str();
  decompress->add_option("--out-dir", da.out_dir, "directory for albedo/normal/roughness/metalness/ao.png")->required();
  decompress->add_option("--aniso", da.aniso, "anisotropic major axis in uv units, as u,v");
  decompress->add_option("--taps", da.taps, "anisotropic taps")->capture_default_str();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "PSNR of an .nbtc against its reference maps");
  eval->add_option("--in", ea.in, "input .nbtc")->required();
  ea.maps.add(eval, true);
  eval->add_option("--lod", ea.lod, "level of detail")->check(CLI::NonNegativeNumber)->capture_default_str();
  eval->add_flag("--per-lod", ea.per_lod, "report every reference mip level");
  eval->add_option("--csv", ea.csv, "also write a comma-separated table");
  eval->add_option("--aniso", ea.aniso, "anisotropic major axis in uv units, as u,v");
  eval->add_option("--taps", ea.taps, "anisotropic taps")->capture_default_str();

  TilesimArgs ta;
  auto* tsim = app.add_subcommand("tilesim", "tile-classified batched decode of a material screen");
  tsim->add_option("--screen", ta.screen, "screen file (text or binary)")->required();
  tsim->add_option("--assets", ta.assets, "material assets as id=file.nbtc")->required();
  tsim->add_option("--stats", ta.stats, "write key: value statistics here");
  tsim->add_option("--out", ta.out, "write the feature buffer here");
  tsim->add_flag("--serial", ta.serial, "use the serial reference loops");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "write a synthetic correlated 5-map texture set");
  synth->add_option("--size", sa.size, "width height")->capture_default_str();
  synth->add_option("--seed", sa.seed, "random seed")->capture_default_str();
  synth->add_option("--out-dir", sa.out_dir, "output directory")->required();

  ScreenArgs sca;
  auto* screen = app.add_subcommand("screen", "write a random material screen");
  screen->add_option("--size", sca.size, "width height")->capture_default_str();
  screen->add_option("--materials", sca.materials, "number of material ids")->capture_default_str();
  screen->add_option("--seed", sca.seed, "random seed")->capture_default_str();
  screen->add_flag("--binary", sca.binary, "binary format instead of text");
  screen->add_option("--out", sca.out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  try {
    if (compress->parsed()) return run_compress(ca);
    if (decompress->parsed()) return run_decompress(da);
    if (eval->parsed()) return run_eval(ea);
    if (tsim->parsed()) return run_tilesim(ta);
    if (synth->parsed()) return run_synth(sa);
    if (screen->parsed()) return run_screen(sca);
  } catch (const TrainingDiverged& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDiverged;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  } catch (const std::exception& e) {
    // InputError, ParseError (malformed files) and missing material assets.
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInput;
  }
  return kInput;
}
