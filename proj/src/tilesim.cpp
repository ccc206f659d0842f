#include "nbtc/tilesim.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "bytes.h"
#include "nbtc/error.h"
#include "nbtc/rng.h"

namespace nbtc::tilesim {

MaterialScreen::MaterialScreen(int width, int height)
    : width_(width),
      height_(height),
      padded_width_((width + kTileWidth - 1) / kTileWidth * kTileWidth),
      padded_height_((height + kTileHeight - 1) / kTileHeight * kTileHeight),
      pixels_(static_cast<std::size_t>(padded_width_) * padded_height_) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("screen dimensions must be positive");
}

namespace {

TileClass classify_tile(const MaterialScreen& s, int tx, int ty) {
  TileClass tc;
  for (int y = ty * kTileHeight; y < (ty + 1) * kTileHeight; ++y) {
    for (int x = tx * kTileWidth; x < (tx + 1) * kTileWidth; ++x) {
      const std::int32_t id = s.at(x, y).material;
      if (id == kNoMaterial) continue;
      if (tc.kind == TileKind::NoNeural) {
        tc = {TileKind::SingleNeural, id};
      } else if (tc.material != id) {
        return {TileKind::Mixed, kNoMaterial};
      }
    }
  }
  return tc;
}

std::vector<PixelCoord> tile_neural_pixels(const MaterialScreen& s, int tx, int ty) {
  std::vector<PixelCoord> out;
  for (int y = ty * kTileHeight; y < (ty + 1) * kTileHeight; ++y)
    for (int x = tx * kTileWidth; x < (tx + 1) * kTileWidth; ++x)
      if (s.at(x, y).material != kNoMaterial) out.push_back({x, y});
  return out;
}

const Asset& find_asset(const AssetMap& assets, std::int32_t id) {
  const auto it = assets.find(id);
  if (it == assets.end() || it->second.pyramid == nullptr || it->second.mlp == nullptr) {
    throw std::out_of_range("no asset for material id " + std::to_string(id));
  }
  return it->second;
}

// One padded 32-row batch through a single decoder; results splatted to
// their pixels.
void decode_batch(const MaterialScreen& s, const Asset& asset, const std::vector<PixelCoord>& pixels,
                  FeatureBuffer& fb) {
  std::vector<double> x(static_cast<std::size_t>(kTilePixels) * kMlpInputs, 0.0);
  std::vector<double> y(static_cast<std::size_t>(kTilePixels) * kMlpOutputs, 0.0);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const ScreenPixel& p = s.at(pixels[i].x, pixels[i].y);
    const LatentVector lv = sample_latents(*asset.pyramid, p.u, p.v, p.lod);
    std::copy(lv.begin(), lv.end(), x.begin() + static_cast<std::ptrdiff_t>(i * kMlpInputs));
  }
  forward_batch(*asset.mlp, x, y, Exec::Serial);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const std::size_t dst = static_cast<std::size_t>(pixels[i].y) * fb.width + pixels[i].x;
    std::copy_n(y.begin() + static_cast<std::ptrdiff_t>(i * kMlpOutputs), kMlpOutputs,
                fb.features.begin() + static_cast<std::ptrdiff_t>(dst * kFeatureChannels));
    fb.covered[dst] = 1;
  }
}

}  // namespace

TileGrid classify_a(const MaterialScreen& screen, Exec exec) {
  TileGrid g;
  g.tiles_x = screen.tiles_x();
  g.tiles_y = screen.tiles_y();
  g.tiles.resize(static_cast<std::size_t>(g.tiles_x) * g.tiles_y);
  const auto n = static_cast<std::int64_t>(g.tiles.size());
  if (exec == Exec::Serial) {
    for (std::int64_t t = 0; t < n; ++t)
      g.tiles[t] = classify_tile(screen, static_cast<int>(t % g.tiles_x), static_cast<int>(t / g.tiles_x));
  } else {
#pragma omp parallel for schedule(static)
    for (std::int64_t t = 0; t < n; ++t)
      g.tiles[t] = classify_tile(screen, static_cast<int>(t % g.tiles_x), static_cast<int>(t / g.tiles_x));
  }
  return g;
}

std::vector<PixelGroup> classify_b(const MaterialScreen& screen, const TileGrid& grid) {
  struct Entry {
    std::int32_t material;
    PixelCoord pixel;
  };
  std::vector<Entry> entries;
  for (int ty = 0; ty < grid.tiles_y; ++ty) {
    for (int tx = 0; tx < grid.tiles_x; ++tx) {
      if (grid.at(tx, ty).kind != TileKind::Mixed) continue;
      for (const PixelCoord& p : tile_neural_pixels(screen, tx, ty)) {
        entries.push_back({screen.at(p.x, p.y).material, p});
      }
    }
  }
  // Entries are already in (tile, pixel) order; a stable sort by material
  // keeps that order inside each material, replacing the GPU's atomics with
  // a deterministic counter.
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.material < b.material; });
  std::vector<PixelGroup> groups;
  for (const Entry& e : entries) {
    if (groups.empty() || groups.back().material != e.material ||
        groups.back().pixels.size() == static_cast<std::size_t>(kTilePixels)) {
      groups.push_back({e.material, {}});
    }
    groups.back().pixels.push_back(e.pixel);
  }
  return groups;
}

DecodeResult decode_screen(const MaterialScreen& screen, const AssetMap& assets, Exec exec, bool record_trace) {
  DecodeResult r;
  r.buffer = FeatureBuffer(screen.padded_width(), screen.padded_height());
  const TileGrid grid = classify_a(screen, exec);

  std::vector<std::pair<std::int32_t, std::vector<PixelCoord>>> batches;
  std::size_t single_fill = 0;
  for (int ty = 0; ty < grid.tiles_y; ++ty) {
    for (int tx = 0; tx < grid.tiles_x; ++tx) {
      const TileClass& tc = grid.at(tx, ty);
      switch (tc.kind) {
        case TileKind::NoNeural:
          ++r.stats.tiles_no_neural;
          break;
        case TileKind::SingleNeural: {
          ++r.stats.tiles_single;
          auto px = tile_neural_pixels(screen, tx, ty);
          single_fill += px.size();
          batches.emplace_back(tc.material, std::move(px));
          break;
        }
        case TileKind::Mixed:
          ++r.stats.tiles_mixed;
          break;
      }
    }
  }
  const std::vector<PixelGroup> groups = classify_b(screen, grid);
  std::size_t group_fill = 0;
  for (const PixelGroup& g : groups) {
    group_fill += g.pixels.size();
    batches.emplace_back(g.material, g.pixels);
  }

  // Resolve every asset before decoding so a missing id fails cleanly.
  std::vector<const Asset*> batch_assets;
  batch_assets.reserve(batches.size());
  for (const auto& b : batches) batch_assets.push_back(&find_asset(assets, b.first));

  const auto n = static_cast<std::int64_t>(batches.size());
  if (exec == Exec::Serial) {
    for (std::int64_t i = 0; i < n; ++i) decode_batch(screen, *batch_assets[i], batches[i].second, r.buffer);
  } else {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) decode_batch(screen, *batch_assets[i], batches[i].second, r.buffer);
  }

  for (int y = 0; y < screen.padded_height(); ++y)
    for (int x = 0; x < screen.padded_width(); ++x)
      if (screen.at(x, y).material != kNoMaterial) ++r.stats.neural_pixels;
  r.stats.decoded_pixels = single_fill + group_fill;
  r.stats.mixed_groups = groups.size();
  r.stats.decode_invocations = batches.size();
  r.stats.single_tile_fill =
      r.stats.tiles_single ? static_cast<double>(single_fill) / (kTilePixels * static_cast<double>(r.stats.tiles_single)) : 0.0;
  r.stats.mixed_group_fill =
      groups.empty() ? 0.0 : static_cast<double>(group_fill) / (kTilePixels * static_cast<double>(groups.size()));

  if (record_trace) {
    for (auto& b : batches) r.trace.push_back({b.first, std::move(b.second)});
  }
  return r;
}

FeatureBuffer decode_screen_per_pixel(const MaterialScreen& screen, const AssetMap& assets) {
  FeatureBuffer fb(screen.padded_width(), screen.padded_height());
  for (int y = 0; y < screen.padded_height(); ++y) {
    for (int x = 0; x < screen.padded_width(); ++x) {
      const ScreenPixel& p = screen.at(x, y);
      if (p.material == kNoMaterial) continue;
      const Asset& a = find_asset(assets, p.material);
      const LatentVector lv = sample_latents(*a.pyramid, p.u, p.v, p.lod);
      const MlpOutput out = forward(*a.mlp, lv);
      const std::size_t dst = static_cast<std::size_t>(y) * fb.width + x;
      std::copy(out.begin(), out.end(), fb.features.begin() + static_cast<std::ptrdiff_t>(dst * kFeatureChannels));
      fb.covered[dst] = 1;
    }
  }
  return fb;
}

MaterialScreen make_random_screen(int width, int height, int materials, std::uint64_t seed) {
  Rng rng(seed);
  MaterialScreen s(width, height);
  struct Disc {
    double cx, cy, r;
    std::int32_t id;
  };
  std::vector<Disc> discs;
  const int count = materials > 0 ? 3 * materials : 0;
  for (int i = 0; i < count; ++i) {
    discs.push_back({rng.uniform(0, width), rng.uniform(0, height),
                     rng.uniform(0.05, 0.35) * std::min(width, height), static_cast<std::int32_t>(i % materials)});
  }
  const double speckle = materials > 0 ? rng.uniform(0.0, 0.05) : 0.0;
  const double lod_scale = rng.uniform(0.0, 4.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      ScreenPixel& p = s.at(x, y);
      for (const Disc& d : discs) {
        const double dx = x - d.cx, dy = y - d.cy;
        if (dx * dx + dy * dy <= d.r * d.r) p.material = d.id;
      }
      if (materials > 0 && rng.uniform() < speckle) {
        p.material = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(materials) + 1)) - 1;
      }
      p.u = std::fmod(3.0 * x / width, 1.0);
      p.v = std::fmod(2.0 * y / height, 1.0);
      p.lod = lod_scale * static_cast<double>(y) / height;
    }
  }
  return s;
}

void save_screen_text(std::ostream& os, const MaterialScreen& s) {
  os << "NBTC-SCREEN 1\n" << s.width() << ' ' << s.height() << '\n';
  const auto old = os.precision(17);
  for (int y = 0; y < s.height(); ++y) {
    for (int x = 0; x < s.width(); ++x) {
      const ScreenPixel& p = s.at(x, y);
      os << p.material << ' ' << p.u << ' ' << p.v << ' ' << p.lod << '\n';
    }
  }
  os.precision(old);
}

void save_screen_binary(std::ostream& os, const MaterialScreen& s) {
  detail::ByteWriter w;
  w.text("NBSC");
  w.u16(1);
  w.u32(static_cast<std::uint32_t>(s.width()));
  w.u32(static_cast<std::uint32_t>(s.height()));
  for (int y = 0; y < s.height(); ++y) {
    for (int x = 0; x < s.width(); ++x) {
      const ScreenPixel& p = s.at(x, y);
      w.i32(p.material);
      w.f32(static_cast<float>(p.u));
      w.f32(static_cast<float>(p.v));
      w.f32(static_cast<float>(p.lod));
    }
  }
  os.write(reinterpret_cast<const char*>(w.data().data()), static_cast<std::streamsize>(w.data().size()));
}

MaterialScreen parse_screen(const std::string& bytes) {
  if (bytes.rfind("NBSC", 0) == 0) {
    detail::ByteReader r(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
    r.bytes(4, "magic");
    if (r.u16("version") != 1) throw ParseError(4, "unsupported screen version");
    const std::uint32_t w = r.u32("width");
    const std::uint32_t h = r.u32("height");
    if (w == 0 || h == 0 || w > 65536 || h > 65536) throw ParseError(6, "bad screen dimensions");
    r.need(static_cast<std::size_t>(w) * h * 16, "pixel records");
    MaterialScreen s(static_cast<int>(w), static_cast<int>(h));
    for (std::uint32_t y = 0; y < h; ++y) {
      for (std::uint32_t x = 0; x < w; ++x) {
        ScreenPixel& p = s.at(static_cast<int>(x), static_cast<int>(y));
        p.material = r.i32("id");
        p.u = r.f32("u");
        p.v = r.f32("v");
        p.lod = r.f32("lod");
      }
    }
    return s;
  }
  std::istringstream in(bytes);
  std::string magic;
  int version = 0;
  int w = 0, h = 0;
  if (!(in >> magic >> version) || magic != "NBTC-SCREEN" || version != 1) {
    throw ParseError(0, "not a screen file (expected NBSC or NBTC-SCREEN 1 header)");
  }
  if (!(in >> w >> h) || w <= 0 || h <= 0) throw ParseError(static_cast<std::size_t>(in.tellg()), "bad screen dimensions");
  MaterialScreen s(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      ScreenPixel& p = s.at(x, y);
      if (!(in >> p.material >> p.u >> p.v >> p.lod)) {
        throw ParseError(bytes.size(), "screen ends before pixel " + std::to_string(y * w + x));
      }
      if (p.material < kNoMaterial) p.material = kNoMaterial;
    }
  }
  return s;
}

MaterialScreen load_screen(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open screen file " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_screen(bytes);
}

void save_feature_buffer(std::ostream& os, const FeatureBuffer& fb) {
  detail::ByteWriter w;
  w.text("NBFB");
  w.u16(1);
  w.u32(static_cast<std::uint32_t>(fb.width));
  w.u32(static_cast<std::uint32_t>(fb.height));
  w.u32(kFeatureChannels);
  for (std::size_t i = 0; i < fb.covered.size(); ++i) {
    w.u8(fb.covered[i]);
    for (int c = 0; c < kFeatureChannels; ++c) w.f32(static_cast<float>(fb.features[i * kFeatureChannels + c]));
  }
  os.write(reinterpret_cast<const char*>(w.data().data()), static_cast<std::streamsize>(w.data().size()));
}

void write_stats(std::ostream& os, const DecodeStats& s) {
  os << "tiles_no_neural: " << s.tiles_no_neural << '\n'
     << "tiles_single: " << s.tiles_single << '\n'
     << "tiles_mixed: " << s.tiles_mixed << '\n'
     << "neural_pixels: " << s.neural_pixels << '\n'
     << "decoded_pixels: " << s.decoded_pixels << '\n'
     << "mixed_groups: " << s.mixed_groups << '\n'
     << "decode_invocations: " << s.decode_invocations << '\n'
     << "single_tile_fill: " << s.single_tile_fill << '\n'
     << "mixed_group_fill: " << s.mixed_group_fill << '\n';
}

}  // namespace nbtc::tilesim
