#include "nbtc/pyramid.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nbtc {

std::optional<Variant> parse_variant(std::string_view s) {
  if (s.size() != 1) return std::nullopt;
  switch (std::toupper(static_cast<unsigned char>(s[0]))) {
    case 'A':
      return Variant::A;
    case 'B':
      return Variant::B;
    default:
      return std::nullopt;
  }
}

char variant_name(Variant v) { return v == Variant::A ? 'A' : 'B'; }

VariantConfig VariantConfig::of(Variant v) {
  VariantConfig c;
  c.scale_log2 = v == Variant::A ? std::array<int, 4>{0, 0, 1, 1} : std::array<int, 4>{0, 1, 2, 3};
  c.shifted = {false, true, false, true};
  return c;
}

void validate_base_dimensions(int width, int height) {
  if (width <= 0 || height <= 0 || width % 32 != 0 || height % 32 != 0) {
    throw std::invalid_argument("base dimensions must be positive multiples of 32, got " +
                                std::to_string(width) + "x" + std::to_string(height));
  }
}

TrainablePyramid TrainablePyramid::create(Variant variant, int width, int height) {
  validate_base_dimensions(width, height);
  TrainablePyramid p;
  p.variant = variant;
  p.width = width;
  p.height = height;
  const VariantConfig cfg = VariantConfig::of(variant);
  for (int k = 0; k < kLatentTextures; ++k) {
    const int w = cfg.width(k, width);
    const int h = cfg.height(k, height);
    p.textures[k] = qat::TrainableLatentTexture(w, h, latent_mip_count(w, h));
  }
  return p;
}

LatentPyramid TrainablePyramid::decode(qat::QuantMode mode, Exec exec) const {
  LatentPyramid out;
  out.variant = variant;
  out.width = width;
  out.height = height;
  for (int k = 0; k < kLatentTextures; ++k) {
    const auto& t = textures[k];
    for (int level = 0; level < t.mip_count(); ++level) {
      out.textures[k].push_back(qat::decode_trainable(t, level, mode, exec));
    }
  }
  return out;
}

LatentPyramid CompressedPyramid::decode() const {
  LatentPyramid out;
  out.variant = variant;
  out.width = width;
  out.height = height;
  const VariantConfig cfg = VariantConfig::of(variant);
  for (int k = 0; k < kLatentTextures; ++k) {
    out.textures[k] = qat::decode_blocks(textures[k], cfg.width(k, width), cfg.height(k, height));
  }
  return out;
}

CompressedPyramid export_pyramid(const TrainablePyramid& p, qat::ExportStats* stats) {
  CompressedPyramid out;
  out.variant = p.variant;
  out.width = p.width;
  out.height = p.height;
  qat::ExportStats total;
  for (int k = 0; k < kLatentTextures; ++k) {
    qat::ExportStats s;
    out.textures[k] = qat::export_to_bc1(p.textures[k], &s);
    total.blocks += s.blocks;
    total.degenerate_blocks += s.degenerate_blocks;
  }
  if (stats != nullptr) *stats = total;
  return out;
}

BilinearTaps bilinear_taps(int width, int height, double u, double v, bool shifted) {
  // Texel i covers [i/W, (i+1)/W); continuous coordinate of its center is i.
  // A shifted texture is read at uv + half a texel, which cancels the -0.5.
  const double x = shifted ? u * width : u * width - 0.5;
  const double y = shifted ? v * height : v * height - 0.5;
  const double fx0 = std::floor(x);
  const double fy0 = std::floor(y);
  const double fx = x - fx0;
  const double fy = y - fy0;
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);
  const int xa = std::clamp(x0, 0, width - 1);
  const int xb = std::clamp(x0 + 1, 0, width - 1);
  const int ya = std::clamp(y0, 0, height - 1);
  const int yb = std::clamp(y0 + 1, 0, height - 1);
  BilinearTaps t;
  const auto row = [width](int yy) { return static_cast<std::size_t>(yy) * width; };
  t.texel = {row(ya) + xa, row(ya) + xb, row(yb) + xa, row(yb) + xb};
  t.weight = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy};
  return t;
}

namespace {

inline void accumulate_taps(const LatentImage& img, const BilinearTaps& t, double scale, double* out) {
  for (int c = 0; c < 3; ++c) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += t.weight[i] * img.rgb[3 * t.texel[i] + c];
    out[c] += scale * s;
  }
}

}  // namespace

Rgb sample_bilinear(const LatentImage& image, double u, double v, bool shifted) {
  const BilinearTaps t = bilinear_taps(image.width, image.height, u, v, shifted);
  Rgb out{0.0, 0.0, 0.0};
  accumulate_taps(image, t, 1.0, out.data());
  return out;
}

double effective_lod(const VariantConfig& cfg, int k, double lod) {
  return std::max(0.0, lod - static_cast<double>(cfg.scale_log2[k]));
}

LatentVector sample_latents(const LatentPyramid& p, double u, double v, double lod,
                            LatentFootprint* footprint) {
  const VariantConfig cfg = p.config();
  LatentVector out{};
  for (int k = 0; k < kLatentTextures; ++k) {
    const LatentChain& chain = p.textures[k];
    const int last = static_cast<int>(chain.size()) - 1;
    const double eff = std::min(effective_lod(cfg, k, lod), static_cast<double>(last));
    const int l0 = static_cast<int>(std::floor(eff));
    const double f = eff - l0;

    TextureFootprint fp;
    fp.levels = (f > 0.0 && l0 < last) ? 2 : 1;
    fp.level = {l0, std::min(l0 + 1, last)};
    fp.level_weight = {fp.levels == 2 ? 1.0 - f : 1.0, fp.levels == 2 ? f : 0.0};
    double* dst = out.data() + 3 * k;
    for (int j = 0; j < fp.levels; ++j) {
      const LatentImage& img = chain[fp.level[j]];
      fp.taps[j] = bilinear_taps(img.width, img.height, u, v, cfg.shifted[k]);
      accumulate_taps(img, fp.taps[j], fp.level_weight[j], dst);
    }
    if (footprint != nullptr) (*footprint)[k] = fp;
  }
  return out;
}

double aniso_tap_offset(int tap, int taps) {
  return (static_cast<double>(tap) + 0.5) / static_cast<double>(taps) - 0.5;
}

LatentVector sample_latents_aniso(const LatentPyramid& p, double u, double v, double axis_u,
                                  double axis_v, double lod, int taps) {
  if (taps < 1) throw std::invalid_argument("anisotropic filtering needs at least one tap");
  LatentVector sum{};
  for (int i = 0; i < taps; ++i) {
    const double t = aniso_tap_offset(i, taps);
    const LatentVector s = sample_latents(p, u + t * axis_u, v + t * axis_v, lod);
    for (int c = 0; c < kLatentChannels; ++c) sum[c] += s[c];
  }
  for (double& c : sum) c /= static_cast<double>(taps);
  return sum;
}

LatentGradients zero_gradients_like(const LatentPyramid& p) {
  LatentGradients g;
  for (int k = 0; k < kLatentTextures; ++k) {
    for (const LatentImage& img : p.textures[k]) g[k].emplace_back(img.rgb.size(), 0.0);
  }
  return g;
}

void scatter_texture_gradient(const TextureFootprint& fp, const double* grad_rgb,
                              std::vector<std::vector<double>>& grids) {
  for (int j = 0; j < fp.levels; ++j) {
    std::vector<double>& grid = grids[fp.level[j]];
    for (int i = 0; i < 4; ++i) {
      const double w = fp.level_weight[j] * fp.taps[j].weight[i];
      double* dst = grid.data() + 3 * fp.taps[j].texel[i];
      for (int c = 0; c < 3; ++c) dst[c] += w * grad_rgb[c];
    }
  }
}

}  // namespace nbtc
