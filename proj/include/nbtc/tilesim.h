#pragma once

// CPU model of the tile-based runtime: 8x4 tiles of a material-ID screen are
// classified as no-neural / single-MLP / mixed, mixed tiles are repacked into
// per-MLP groups of up to 32 pixels, and every batch is decoded with exactly
// one decoder before results are splatted back to their pixels.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nbtc/mlp.h"
#include "nbtc/parallel.h"
#include "nbtc/pyramid.h"
#include "nbtc/texture_set.h"

namespace nbtc::tilesim {

inline constexpr int kTileWidth = 8;
inline constexpr int kTileHeight = 4;
inline constexpr int kTilePixels = kTileWidth * kTileHeight;
inline constexpr std::int32_t kNoMaterial = -1;

struct ScreenPixel {
  std::int32_t material = kNoMaterial;
  double u = 0.0;
  double v = 0.0;
  double lod = 0.0;
  friend bool operator==(const ScreenPixel&, const ScreenPixel&) = default;
};

/// Visibility-buffer stand-in. Storage is padded up to whole tiles; padding
/// pixels never carry a material.
class MaterialScreen {
 public:
  MaterialScreen() = default;
  MaterialScreen(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  int padded_width() const { return padded_width_; }
  int padded_height() const { return padded_height_; }
  int tiles_x() const { return padded_width_ / kTileWidth; }
  int tiles_y() const { return padded_height_ / kTileHeight; }

  ScreenPixel& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * padded_width_ + x]; }
  const ScreenPixel& at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * padded_width_ + x]; }

  friend bool operator==(const MaterialScreen&, const MaterialScreen&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int padded_width_ = 0;
  int padded_height_ = 0;
  std::vector<ScreenPixel> pixels_;
};

enum class TileKind : std::uint8_t { NoNeural, SingleNeural, Mixed };

struct TileClass {
  TileKind kind = TileKind::NoNeural;
  std::int32_t material = kNoMaterial;  // set for SingleNeural only
  friend bool operator==(const TileClass&, const TileClass&) = default;
};

struct TileGrid {
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<TileClass> tiles;  // row-major
  const TileClass& at(int tx, int ty) const { return tiles[static_cast<std::size_t>(ty) * tiles_x + tx]; }
};

/// First classification pass.
TileGrid classify_a(const MaterialScreen& screen, Exec exec = Exec::Serial);

struct PixelCoord {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

struct PixelGroup {
  std::int32_t material = kNoMaterial;
  std::vector<PixelCoord> pixels;  // at most kTilePixels
};

/// Second pass: neural pixels of Mixed tiles, stably sorted by material in
/// (tile index, pixel index) order and cut into groups of 32. Groups are
/// ordered by material, then by creation.
std::vector<PixelGroup> classify_b(const MaterialScreen& screen, const TileGrid& grid);

struct Asset {
  const LatentPyramid* pyramid = nullptr;
  const MlpDecoder* mlp = nullptr;
};
using AssetMap = std::map<std::int32_t, Asset>;

struct FeatureBuffer {
  int width = 0;
  int height = 0;
  std::vector<double> features;      // width*height*9, zero where not covered
  std::vector<std::uint8_t> covered;  // 1 where a neural decode wrote the pixel

  FeatureBuffer() = default;
  FeatureBuffer(int w, int h)
      : width(w),
        height(h),
        features(static_cast<std::size_t>(w) * h * kFeatureChannels, 0.0),
        covered(static_cast<std::size_t>(w) * h, 0) {}
  friend bool operator==(const FeatureBuffer&, const FeatureBuffer&) = default;
};

struct DecodeStats {
  std::size_t tiles_no_neural = 0;
  std::size_t tiles_single = 0;
  std::size_t tiles_mixed = 0;
  std::size_t neural_pixels = 0;
  std::size_t decoded_pixels = 0;
  std::size_t mixed_groups = 0;
  std::size_t decode_invocations = 0;
  double single_tile_fill = 0.0;  // mean neural pixels / 32 over single tiles
  double mixed_group_fill = 0.0;  // mean group size / 32
};

/// One batched decoder call, kept when tracing is requested.
struct Invocation {
  std::int32_t material = kNoMaterial;
  std::vector<PixelCoord> pixels;
};

struct DecodeResult {
  FeatureBuffer buffer;
  DecodeStats stats;
  std::vector<Invocation> trace;
};

/// Throws std::out_of_range naming the id when a referenced asset is missing.
/// Outputs are raw decoder values (no clamping), matching the per-pixel
/// oracle bit for bit.
DecodeResult decode_screen(const MaterialScreen& screen, const AssetMap& assets, Exec exec = Exec::Serial,
                           bool record_trace = false);

/// Unbatched reference: every neural pixel decoded on its own.
FeatureBuffer decode_screen_per_pixel(const MaterialScreen& screen, const AssetMap& assets);

/// Random screen with `materials` ids laid out as a few overlapping discs on
/// a background with no material; uv and lod vary smoothly.
MaterialScreen make_random_screen(int width, int height, int materials, std::uint64_t seed);

/// Text format: "NBTC-SCREEN 1", "width height", then one "id u v lod" line
/// per pixel in row-major order (id -1 = none). Binary format: "NBSC", u16
/// version, u32 width, u32 height, then per pixel i32 id and f32 u, v, lod,
/// little endian. load_screen detects the format from the first bytes.
void save_screen_text(std::ostream& os, const MaterialScreen& screen);
void save_screen_binary(std::ostream& os, const MaterialScreen& screen);
MaterialScreen load_screen(const std::string& path);
MaterialScreen parse_screen(const std::string& bytes);

/// "NBFB", u16 version, u32 width, u32 height, u32 channels, then per pixel
/// a u8 coverage flag and `channels` f32 values, little endian.
void save_feature_buffer(std::ostream& os, const FeatureBuffer& fb);
void write_stats(std::ostream& os, const DecodeStats& stats);

}  // namespace nbtc::tilesim
