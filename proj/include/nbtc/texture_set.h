#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "nbtc/image.h"

namespace nbtc {

inline constexpr int kFeatureChannels = 9;

using FeatureVector = std::array<double, kFeatureChannels>;

/// Channel slots of a texture set, in storage order.
enum class ChannelRole : std::uint8_t {
  AlbedoR = 0,
  AlbedoG,
  AlbedoB,
  NormalX,
  NormalY,
  NormalZ,
  Roughness,
  Metalness,
  AmbientOcclusion,
};

std::string_view channel_name(ChannelRole role);
std::array<ChannelRole, kFeatureChannels> default_channel_roles();

/// Nine-channel material reference with its box-filtered mip chain. Mip
/// level l is (W >> l) x (H >> l); the chain stops at the same depth as the
/// latent textures (coarsest side >= 4).
class TextureSet {
 public:
  TextureSet() = default;
  /// Takes a base image with kFeatureChannels channels and builds the mips.
  explicit TextureSet(Image base);

  int width() const { return mips_.empty() ? 0 : mips_[0].width; }
  int height() const { return mips_.empty() ? 0 : mips_[0].height; }
  int mip_count() const { return static_cast<int>(mips_.size()); }
  double max_lod() const { return static_cast<double>(mip_count() - 1); }
  const Image& mip(int level) const { return mips_.at(level); }

 private:
  std::vector<Image> mips_;
};

/// 2x2 box average; odd trailing rows/columns are dropped.
Image downsample_box(const Image& src);

/// Bilinear fetch with the same texel-center / clamp-to-edge convention as
/// the latent sampler.
FeatureVector reference_bilinear(const Image& img, double u, double v);

/// Trilinear fetch: bilinear at floor(lod) and ceil(lod), blended by frac(lod).
/// lod is clamped to [0, max_lod].
FeatureVector reference_fetch(const TextureSet& ts, double u, double v, double lod);

/// Uniform-valued set, mostly for tests.
TextureSet make_constant_texture_set(int width, int height, const FeatureVector& value);

/// Smooth procedural PBR-like set whose nine channels are nonlinear
/// functions of a few shared noise fields, so they are strongly correlated.
TextureSet make_synthetic_texture_set(int width, int height, std::uint64_t seed);

}  // namespace nbtc
