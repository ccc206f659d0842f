#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "nbtc/image.h"
#include "nbtc/mlp.h"
#include "nbtc/parallel.h"
#include "nbtc/pyramid.h"
#include "nbtc/texture_set.h"

namespace nbtc {

/// Reported for identical images.
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) over all texels and channels, capped at kPsnrCap.
/// Throws std::invalid_argument when shapes differ.
double psnr(const Image& decoded, const Image& reference);
double psnr_from_mse(double mse);
double mse(const Image& a, const Image& b);
/// MSE of one channel.
double channel_mse(const Image& a, const Image& b, int channel);

/// Exact non-negative rational with 64-bit parts, always reduced.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);
  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  friend bool operator==(const Rational&, const Rational&) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline constexpr int kReferenceBitsPerTexel = 72;  // 9 channels x 8 bits

struct Footprint {
  Rational latent_bits_per_texel;
  Rational mlp_bits_per_texel;
  Rational total_bits_per_texel;
  Rational reference_bits_per_texel;
  Rational compression_ratio;  // reference / total
};

/// Storage cost per base texel. Each latent texture costs 4 bits per own
/// texel (BC1). include_mlp adds 32-bit MLP weights amortized over W*H;
/// include_mips scales both latent and reference costs by 4/3.
Footprint footprint(Variant variant, int width, int height, int hidden_dim, bool include_mips,
                    bool include_mlp = true, int hidden_layers = 1);

struct AnisoSpec {
  double axis_u = 0.0;
  double axis_v = 0.0;
  int taps = 1;
};

/// Decodes every texel of reference mip floor(lod) (at its center, at the
/// given lod), clamping outputs to [0,1].
Image decode_image(const LatentPyramid& pyramid, const MlpDecoder& mlp, int width, int height,
                   double lod, const std::optional<AnisoSpec>& aniso = std::nullopt,
                   Exec exec = Exec::Serial);

/// Reference image on the same grid; anisotropic references average the
/// trilinear reference over the same taps.
Image reference_image(const TextureSet& ts, double lod, const std::optional<AnisoSpec>& aniso = std::nullopt,
                      Exec exec = Exec::Serial);

struct EvalReport {
  double lod = 0.0;
  bool anisotropic = false;
  int taps = 1;
  std::array<double, kFeatureChannels> channel_psnr{};
  std::array<double, kFeatureChannels> channel_mse{};
  double aggregate_mse = 0.0;
  double aggregate_psnr = 0.0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

EvalReport evaluate_asset(const LatentPyramid& pyramid, const MlpDecoder& mlp, const TextureSet& ts,
                          double lod, const std::optional<AnisoSpec>& aniso = std::nullopt,
                          Exec exec = Exec::Serial);

/// key: value lines.
void write_report(std::ostream& os, const EvalReport& r);
/// Comma-separated: header then one row per report.
void write_report_csv(std::ostream& os, const std::vector<EvalReport>& reports);
void write_footprint(std::ostream& os, const Footprint& f);

}  // namespace nbtc
