#pragma once

// The four-texture latent stack: variant resolution layouts, half-texel
// shifts, per-texture mip chains, and the bilinear / trilinear / anisotropic
// samplers that produce the decoder's 12-channel input.

#include <array>
#include <optional>
#include <span>

#include "nbtc/latent_image.h"
#include "nbtc/parallel.h"
#include "nbtc/qat.h"

namespace nbtc {

inline constexpr int kLatentTextures = 4;
inline constexpr int kLatentChannels = 3 * kLatentTextures;

using LatentVector = std::array<double, kLatentChannels>;
using Rgb = std::array<double, 3>;

enum class Variant : std::uint8_t { A = 0, B = 1 };

/// Parses "A"/"B" (case-insensitive); nullopt for anything else.
std::optional<Variant> parse_variant(std::string_view s);
char variant_name(Variant v);

struct VariantConfig {
  /// Texture k has resolution (W >> scale_log2[k], H >> scale_log2[k]).
  std::array<int, kLatentTextures> scale_log2{};
  std::array<bool, kLatentTextures> shifted{false, true, false, true};

  static VariantConfig of(Variant v);
  int width(int k, int base_width) const { return base_width >> scale_log2[k]; }
  int height(int k, int base_height) const { return base_height >> scale_log2[k]; }
};

/// Decoded (sampleable) latent stack. Immutable once built.
struct LatentPyramid {
  Variant variant = Variant::A;
  int width = 0;
  int height = 0;
  std::array<LatentChain, kLatentTextures> textures;

  VariantConfig config() const { return VariantConfig::of(variant); }
  friend bool operator==(const LatentPyramid&, const LatentPyramid&) = default;
};

/// Base dimensions must be positive multiples of 32.
void validate_base_dimensions(int width, int height);

/// The latent stack as trainable raw parameters.
struct TrainablePyramid {
  Variant variant = Variant::A;
  int width = 0;
  int height = 0;
  std::array<qat::TrainableLatentTexture, kLatentTextures> textures;

  static TrainablePyramid create(Variant variant, int width, int height);
  LatentPyramid decode(qat::QuantMode mode = qat::QuantMode::Quantized, Exec exec = Exec::Serial) const;
};

/// The latent stack frozen as BC1 blocks.
struct CompressedPyramid {
  Variant variant = Variant::A;
  int width = 0;
  int height = 0;
  std::array<qat::BlockChain, kLatentTextures> textures;

  LatentPyramid decode() const;
  friend bool operator==(const CompressedPyramid&, const CompressedPyramid&) = default;
};

CompressedPyramid export_pyramid(const TrainablePyramid& p, qat::ExportStats* stats = nullptr);

/// Four texel offsets (into LatentImage::rgb / 3) and their bilinear weights.
struct BilinearTaps {
  std::array<std::size_t, 4> texel{};
  std::array<double, 4> weight{};
};

/// Texel-center addressing with clamp-to-edge; shifted textures sample at
/// uv + half a texel of this level in both axes.
BilinearTaps bilinear_taps(int width, int height, double u, double v, bool shifted);

Rgb sample_bilinear(const LatentImage& image, double u, double v, bool shifted);

/// Which texels one trilinear lookup of one texture read, with weights.
struct TextureFootprint {
  int levels = 0;  // 1 or 2
  std::array<int, 2> level{};
  std::array<double, 2> level_weight{};
  std::array<BilinearTaps, 2> taps{};
};

using LatentFootprint = std::array<TextureFootprint, kLatentTextures>;

/// LOD at which texture k is read for a reference-space LOD.
double effective_lod(const VariantConfig& cfg, int k, double lod);

/// Trilinear fetch of all four textures, concatenated in texture order.
/// When `footprint` is non-null it receives the texels and weights used.
LatentVector sample_latents(const LatentPyramid& p, double u, double v, double lod,
                            LatentFootprint* footprint = nullptr);

/// Averages `taps` isotropic fetches at uv + t*axis, t evenly spaced over
/// [-0.5, 0.5] by the midpoint rule. taps == 1 is exactly sample_latents.
LatentVector sample_latents_aniso(const LatentPyramid& p, double u, double v, double axis_u,
                                  double axis_v, double lod, int taps);

/// Offsets of the anisotropic taps along the axis.
double aniso_tap_offset(int tap, int taps);

/// Adds grad (12 channels) through a recorded footprint into per-texture,
/// per-level RGB gradient grids shaped like the pyramid's images.
using LatentGradients = std::array<std::vector<std::vector<double>>, kLatentTextures>;
LatentGradients zero_gradients_like(const LatentPyramid& p);
void scatter_texture_gradient(const TextureFootprint& fp, const double* grad_rgb,
                              std::vector<std::vector<double>>& grids);

}  // namespace nbtc
