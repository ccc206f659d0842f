#include "nbtc/texture_set.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nbtc/latent_image.h"
#include "nbtc/pyramid.h"
#include "nbtc/rng.h"

namespace nbtc {

std::string_view channel_name(ChannelRole role) {
  switch (role) {
    case ChannelRole::AlbedoR: return "albedo_r";
    case ChannelRole::AlbedoG: return "albedo_g";
    case ChannelRole::AlbedoB: return "albedo_b";
    case ChannelRole::NormalX: return "normal_x";
    case ChannelRole::NormalY: return "normal_y";
    case ChannelRole::NormalZ: return "normal_z";
    case ChannelRole::Roughness: return "roughness";
    case ChannelRole::Metalness: return "metalness";
    case ChannelRole::AmbientOcclusion: return "ao";
  }
  return "unknown";
}

std::array<ChannelRole, kFeatureChannels> default_channel_roles() {
  std::array<ChannelRole, kFeatureChannels> roles{};
  for (int i = 0; i < kFeatureChannels; ++i) roles[i] = static_cast<ChannelRole>(i);
  return roles;
}

Image downsample_box(const Image& src) {
  Image dst(std::max(1, src.width / 2), std::max(1, src.height / 2), src.channels);
  for (int y = 0; y < dst.height; ++y) {
    for (int x = 0; x < dst.width; ++x) {
      const int sx = std::min(2 * x, src.width - 1);
      const int sy = std::min(2 * y, src.height - 1);
      const int sx1 = std::min(sx + 1, src.width - 1);
      const int sy1 = std::min(sy + 1, src.height - 1);
      for (int c = 0; c < src.channels; ++c) {
        dst.at(x, y, c) =
            0.25 * (src.at(sx, sy, c) + src.at(sx1, sy, c) + src.at(sx, sy1, c) + src.at(sx1, sy1, c));
      }
    }
  }
  return dst;
}

TextureSet::TextureSet(Image base) {
  if (base.channels != kFeatureChannels) {
    throw std::invalid_argument("texture set needs 9 channels, got " + std::to_string(base.channels));
  }
  const int count = latent_mip_count(base.width, base.height);
  mips_.push_back(std::move(base));
  for (int l = 1; l < count; ++l) mips_.push_back(downsample_box(mips_.back()));
}

FeatureVector reference_bilinear(const Image& img, double u, double v) {
  const BilinearTaps t = bilinear_taps(img.width, img.height, u, v, false);
  FeatureVector out{};
  for (int c = 0; c < kFeatureChannels; ++c) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += t.weight[i] * img.data[t.texel[i] * kFeatureChannels + c];
    out[c] = s;
  }
  return out;
}

FeatureVector reference_fetch(const TextureSet& ts, double u, double v, double lod) {
  const double clamped = std::clamp(lod, 0.0, ts.max_lod());
  const int l0 = static_cast<int>(std::floor(clamped));
  const double f = clamped - l0;
  FeatureVector a = reference_bilinear(ts.mip(l0), u, v);
  if (f > 0.0 && l0 + 1 < ts.mip_count()) {
    const FeatureVector b = reference_bilinear(ts.mip(l0 + 1), u, v);
    for (int c = 0; c < kFeatureChannels; ++c) a[c] = (1.0 - f) * a[c] + f * b[c];
  }
  return a;
}

TextureSet make_constant_texture_set(int width, int height, const FeatureVector& value) {
  Image base(width, height, kFeatureChannels);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < kFeatureChannels; ++c) base.at(x, y, c) = value[c];
  return TextureSet(std::move(base));
}

namespace {

// Sum of periodic plane waves with integer frequencies, normalized to [0,1].
struct NoiseField {
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves;
  double norm = 0.0;

  NoiseField(Rng& rng, int count, double max_freq) {
    for (int i = 0; i < count; ++i) {
      Wave w;
      w.fx = std::round(rng.uniform(-max_freq, max_freq));
      w.fy = std::round(rng.uniform(-max_freq, max_freq));
      if (w.fx == 0 && w.fy == 0) w.fx = 1;
      w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      w.amp = 1.0 / std::sqrt(w.fx * w.fx + w.fy * w.fy);
      waves.push_back(w);
      norm += w.amp;
    }
  }

  double operator()(double u, double v) const {
    double s = 0.0;
    for (const auto& w : waves) s += w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * u + w.fy * v) + w.phase);
    return 0.5 + 0.5 * s / norm;
  }
};

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

TextureSet make_synthetic_texture_set(int width, int height, std::uint64_t seed) {
  Rng rng(seed);
  const NoiseField hue(rng, 6, 4.0);
  const NoiseField height_field(rng, 10, 12.0);
  const NoiseField wear(rng, 8, 8.0);
  const NoiseField mask(rng, 5, 3.0);

  Image base(width, height, kFeatureChannels);
  const double du = 1.0 / width;
  const double dv = 1.0 / height;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = (x + 0.5) * du;
      const double v = (y + 0.5) * dv;
      const double h = height_field(u, v);
      const double c = hue(u, v);
      const double w = wear(u, v);
      const double metal = smoothstep(0.55, 0.65, mask(u, v));

      // Normal from central differences of the height field.
      const double hx = (height_field(u + du, v) - height_field(u - du, v)) * width * 0.02;
      const double hy = (height_field(u, v + dv) - height_field(u, v - dv)) * height * 0.02;
      const double inv = 1.0 / std::sqrt(hx * hx + hy * hy + 1.0);

      const double dirt = 0.35 + 0.65 * w;
      double* px = &base.data[base.offset(x, y)];
      px[0] = (0.25 + 0.6 * c) * dirt * (1.0 - 0.3 * metal) + 0.3 * metal;
      px[1] = (0.2 + 0.5 * c * c) * dirt + 0.25 * metal;
      px[2] = (0.15 + 0.35 * (1.0 - c)) * dirt + 0.2 * metal;
      px[3] = 0.5 - 0.5 * hx * inv;
      px[4] = 0.5 - 0.5 * hy * inv;
      px[5] = 0.5 + 0.5 * inv;
      px[6] = std::clamp(0.9 - 0.6 * w * (1.0 - metal) - 0.5 * metal + 0.1 * h, 0.0, 1.0);
      px[7] = metal;
      px[8] = std::clamp(0.3 + 0.7 * std::sqrt(h), 0.0, 1.0);
      for (int ch = 0; ch < kFeatureChannels; ++ch) px[ch] = std::clamp(px[ch], 0.0, 1.0);
    }
  }
  return TextureSet(std::move(base));
}

}  // namespace nbtc
