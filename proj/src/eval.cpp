#include "nbtc/eval.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace nbtc {

double mse(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw std::invalid_argument("mse: image shapes differ");
  }
  if (a.data.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return s / static_cast<double>(a.data.size());
}

double channel_mse(const Image& a, const Image& b, int channel) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw std::invalid_argument("channel_mse: image shapes differ");
  }
  double s = 0.0;
  const std::size_t texels = static_cast<std::size_t>(a.width) * a.height;
  for (std::size_t i = 0; i < texels; ++i) {
    const double d = a.data[i * a.channels + channel] - b.data[i * b.channels + channel];
    s += d * d;
  }
  return texels == 0 ? 0.0 : s / static_cast<double>(texels);
}

double psnr_from_mse(double m) {
  if (m <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

double psnr(const Image& decoded, const Image& reference) { return psnr_from_mse(mse(decoded, reference)); }

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("Rational: zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  num_ = g == 0 ? 0 : num / g;
  den_ = g == 0 ? 1 : den / g;
}

Rational operator+(const Rational& a, const Rational& b) {
  const std::int64_t g = std::gcd(a.den_, b.den_);
  return Rational(a.num_ * (b.den_ / g) + b.num_ * (a.den_ / g), a.den_ / g * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
  const std::int64_t g1 = std::gcd(a.num_ < 0 ? -a.num_ : a.num_, b.den_);
  const std::int64_t g2 = std::gcd(b.num_ < 0 ? -b.num_ : b.num_, a.den_);
  const std::int64_t n1 = g1 ? a.num_ / g1 : a.num_, d2 = g1 ? b.den_ / g1 : b.den_;
  const std::int64_t n2 = g2 ? b.num_ / g2 : b.num_, d1 = g2 ? a.den_ / g2 : a.den_;
  return Rational(n1 * n2, d1 * d2);
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) throw std::invalid_argument("Rational: division by zero");
  return a * Rational(b.den_, b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  // Cross-multiplication in 128 bits cannot overflow for 64-bit parts.
  const __int128 l = static_cast<__int128>(a.num_) * b.den_;
  const __int128 r = static_cast<__int128>(b.num_) * a.den_;
  return l < r ? std::strong_ordering::less : (l > r ? std::strong_ordering::greater : std::strong_ordering::equal);
}

Footprint footprint(Variant variant, int width, int height, int hidden_dim, bool include_mips,
                    bool include_mlp, int hidden_layers) {
  validate_base_dimensions(width, height);
  const VariantConfig cfg = VariantConfig::of(variant);
  const std::int64_t base = static_cast<std::int64_t>(width) * height;
  Rational latent(0);
  for (int k = 0; k < kLatentTextures; ++k) {
    const std::int64_t texels = static_cast<std::int64_t>(cfg.width(k, width)) * cfg.height(k, height);
    latent = latent + Rational(4 * texels, base);
  }
  Rational reference(kReferenceBitsPerTexel);
  if (include_mips) {
    latent = latent * Rational(4, 3);
    reference = reference * Rational(4, 3);
  }
  Rational mlp(0);
  if (include_mlp) {
    mlp = Rational(static_cast<std::int64_t>(mlp_param_count(hidden_dim, hidden_layers)) * 32, base);
  }
  Footprint f;
  f.latent_bits_per_texel = latent;
  f.mlp_bits_per_texel = mlp;
  f.total_bits_per_texel = latent + mlp;
  f.reference_bits_per_texel = reference;
  f.compression_ratio = reference / f.total_bits_per_texel;
  return f;
}

namespace {

template <typename Fn>
void for_each_row(int height, Exec exec, Fn&& fn) {
  if (exec == Exec::Serial) {
    for (int y = 0; y < height; ++y) fn(y);
  } else {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) fn(y);
  }
}

int grid_level(double lod) { return static_cast<int>(std::floor(std::max(0.0, lod))); }

}  // namespace

Image decode_image(const LatentPyramid& pyramid, const MlpDecoder& mlp, int width, int height,
                   double lod, const std::optional<AnisoSpec>& aniso, Exec exec) {
  const int level = grid_level(lod);
  const int w = std::max(1, width >> level);
  const int h = std::max(1, height >> level);
  Image out(w, h, kFeatureChannels);
  for_each_row(h, exec, [&](int y) {
    std::vector<double> xs(static_cast<std::size_t>(w) * kMlpInputs);
    std::vector<double> ys(static_cast<std::size_t>(w) * kMlpOutputs);
    const double v = (y + 0.5) / h;
    for (int x = 0; x < w; ++x) {
      const double u = (x + 0.5) / w;
      const LatentVector lv = aniso ? sample_latents_aniso(pyramid, u, v, aniso->axis_u, aniso->axis_v, lod, aniso->taps)
                                    : sample_latents(pyramid, u, v, lod);
      std::copy(lv.begin(), lv.end(), xs.begin() + static_cast<std::ptrdiff_t>(x) * kMlpInputs);
    }
    forward_batch(mlp, xs, ys, Exec::Serial);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < kFeatureChannels; ++c) {
        out.at(x, y, c) = std::clamp(ys[static_cast<std::size_t>(x) * kMlpOutputs + c], 0.0, 1.0);
      }
    }
  });
  return out;
}

Image reference_image(const TextureSet& ts, double lod, const std::optional<AnisoSpec>& aniso, Exec exec) {
  const int level = grid_level(lod);
  const int w = std::max(1, ts.width() >> level);
  const int h = std::max(1, ts.height() >> level);
  Image out(w, h, kFeatureChannels);
  for_each_row(h, exec, [&](int y) {
    const double v = (y + 0.5) / h;
    for (int x = 0; x < w; ++x) {
      const double u = (x + 0.5) / w;
      FeatureVector f{};
      if (aniso) {
        for (int i = 0; i < aniso->taps; ++i) {
          const double t = aniso_tap_offset(i, aniso->taps);
          const FeatureVector s = reference_fetch(ts, u + t * aniso->axis_u, v + t * aniso->axis_v, lod);
          for (int c = 0; c < kFeatureChannels; ++c) f[c] += s[c];
        }
        for (double& c : f) c /= static_cast<double>(aniso->taps);
      } else {
        f = reference_fetch(ts, u, v, lod);
      }
      for (int c = 0; c < kFeatureChannels; ++c) out.at(x, y, c) = f[c];
    }
  });
  return out;
}

EvalReport evaluate_asset(const LatentPyramid& pyramid, const MlpDecoder& mlp, const TextureSet& ts,
                          double lod, const std::optional<AnisoSpec>& aniso, Exec exec) {
  const Image decoded = decode_image(pyramid, mlp, ts.width(), ts.height(), lod, aniso, exec);
  const Image reference = reference_image(ts, lod, aniso, exec);
  EvalReport r;
  r.lod = lod;
  r.anisotropic = aniso.has_value();
  r.taps = aniso ? aniso->taps : 1;
  for (int c = 0; c < kFeatureChannels; ++c) {
    r.channel_mse[c] = channel_mse(decoded, reference, c);
    r.channel_psnr[c] = psnr_from_mse(r.channel_mse[c]);
  }
  r.aggregate_mse = mse(decoded, reference);
  r.aggregate_psnr = psnr_from_mse(r.aggregate_mse);
  return r;
}

void write_report(std::ostream& os, const EvalReport& r) {
  const auto old = os.precision(6);
  os << "lod: " << r.lod << '\n';
  os << "filter: " << (r.anisotropic ? "anisotropic" : "isotropic") << '\n';
  os << "taps: " << r.taps << '\n';
  for (int c = 0; c < kFeatureChannels; ++c) {
    os << "psnr_" << channel_name(static_cast<ChannelRole>(c)) << ": " << r.channel_psnr[c] << '\n';
  }
  os << "psnr: " << r.aggregate_psnr << '\n';
  os.precision(old);
}

void write_report_csv(std::ostream& os, const std::vector<EvalReport>& reports) {
  os << "lod,filter,taps";
  for (int c = 0; c < kFeatureChannels; ++c) os << ",psnr_" << channel_name(static_cast<ChannelRole>(c));
  os << ",psnr\n";
  const auto old = os.precision(8);
  for (const auto& r : reports) {
    os << r.lod << ',' << (r.anisotropic ? "aniso" : "iso") << ',' << r.taps;
    for (double p : r.channel_psnr) os << ',' << p;
    os << ',' << r.aggregate_psnr << '\n';
  }
  os.precision(old);
}

void write_footprint(std::ostream& os, const Footprint& f) {
  const auto old = os.precision(8);
  os << "latent_bits_per_texel: " << f.latent_bits_per_texel.to_double() << '\n';
  os << "mlp_bits_per_texel: " << f.mlp_bits_per_texel.to_double() << '\n';
  os << "bits_per_texel: " << f.total_bits_per_texel.to_double() << '\n';
  os << "reference_bits_per_texel: " << f.reference_bits_per_texel.to_double() << '\n';
  os << "compression_ratio: " << f.compression_ratio.to_double() << '\n';
  os.precision(old);
}

}  // namespace nbtc
