#pragma once

// On-disk formats: the .nbtc compressed asset (see FORMAT.md), texture-set
// ingestion from 8-bit PNG maps, and decoded PNG export.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nbtc/image.h"
#include "nbtc/mlp.h"
#include "nbtc/pyramid.h"
#include "nbtc/texture_set.h"

namespace nbtc {

inline constexpr std::uint16_t kNbtcVersion = 1;

struct NbtcFile {
  std::uint16_t version = kNbtcVersion;
  std::array<ChannelRole, kFeatureChannels> roles = default_channel_roles();
  int hidden_dim = 0;
  int hidden_layers = 1;
  std::vector<float> mlp_weights;  // MlpDecoder::params() layout
  CompressedPyramid latents;

  friend bool operator==(const NbtcFile&, const NbtcFile&) = default;
};

NbtcFile make_nbtc(const CompressedPyramid& latents, const MlpDecoder& mlp);
/// Decoder with the stored 32-bit weights widened to double.
MlpDecoder mlp_from_nbtc(const NbtcFile& f);

std::vector<std::uint8_t> serialize_nbtc(const NbtcFile& f);
/// Validates magic, version, variant, block modes and exact payload length.
/// Throws ParseError with the failing byte offset.
NbtcFile parse_nbtc(std::span<const std::uint8_t> bytes);

/// Throw IoError on filesystem failure.
void save_nbtc(const std::string& path, const NbtcFile& f);
NbtcFile load_nbtc(const std::string& path);

/// 8-bit image as read from disk.
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1..4
  std::vector<std::uint8_t> data;
};

Image8 read_png(const std::string& path);
void write_png(const std::string& path, const Image8& img);

struct TextureSetPaths {
  std::string albedo;
  std::string normal;
  std::string roughness;
  std::string metalness;
  std::string ao;
};

/// Packs five 8-bit maps into the nine-channel layout (albedo RGB, normal
/// XYZ, roughness, metalness, AO). RGB maps take channels 0..2 (gray inputs
/// are replicated); scalar maps take channel 0. Throws InputError on
/// mismatched sizes or dimensions that are not multiples of 32.
TextureSet assemble_texture_set(const Image8& albedo, const Image8& normal, const Image8& roughness,
                                const Image8& metalness, const Image8& ao);
TextureSet import_texture_set(const TextureSetPaths& paths);

/// Writes albedo.png, normal.png, roughness.png, metalness.png, ao.png
/// (values clamped to [0,1] and rounded to 8 bits) into `dir`.
void export_feature_images(const std::string& dir, const Image& features);

/// Quantizes a 9-channel image to the five 8-bit maps, in the order above.
std::array<Image8, 5> split_feature_image(const Image& features);

}  // namespace nbtc
