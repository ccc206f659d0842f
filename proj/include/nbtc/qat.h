#pragma once

// Quantization-aware latent textures: BC1 endpoints and alphas kept as
// unconstrained reals, decoded through sigmoid + quantization with a
// straight-through backward pass, plus the Adam optimizer.

#include <cstdint>
#include <span>
#include <vector>

#include "nbtc/bc1.h"
#include "nbtc/latent_image.h"
#include "nbtc/parallel.h"
#include "nbtc/rng.h"

namespace nbtc::qat {

/// Round half away from zero onto the (2^bits - 1)-step grid of [0,1].
/// Inputs outside [0,1] are clamped first.
int quant_code(double x, int bits);

/// Forward value of the quantizer: quant_code(x, bits) / (2^bits - 1).
/// Its gradient is the identity (straight-through).
double quant(double x, int bits);

inline constexpr int kAlphaBits = 2;
inline constexpr int kEndpointBits[3] = {5, 6, 5};

double sigmoid(double x);
/// Derivative of sigmoid expressed through its output s = sigmoid(x).
inline double sigmoid_grad_from_output(double s) { return s * (1.0 - s); }

/// Quantized decodes exactly what a BC1 texture unit would return; Smooth
/// treats quant as the identity (used for finite-difference checks).
enum class QuantMode { Quantized, Smooth };

struct MipLayout {
  int width = 0;
  int height = 0;
  int blocks_x = 0;
  int blocks_y = 0;
  std::size_t endpoint0 = 0;  // offset of blocks*3 raw values
  std::size_t endpoint1 = 0;  // offset of blocks*3 raw values
  std::size_t alpha = 0;      // offset of width*height raw values

  int block_count() const { return blocks_x * blocks_y; }
};

/// Raw (pre-sigmoid) BC1 parameters for every mip of one latent texture,
/// stored in a single flat array so one optimizer state covers all of it.
class TrainableLatentTexture {
 public:
  TrainableLatentTexture() = default;
  TrainableLatentTexture(int width, int height, int mip_count);

  int width() const { return width_; }
  int height() const { return height_; }
  int mip_count() const { return static_cast<int>(mips_.size()); }
  const MipLayout& mip(int level) const { return mips_.at(level); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::span<double> endpoint0(int level);
  std::span<double> endpoint1(int level);
  std::span<double> alpha(int level);
  std::span<const double> endpoint0(int level) const;
  std::span<const double> endpoint1(int level) const;
  std::span<const double> alpha(int level) const;

  /// Uniform initialization of every raw value in [lo, hi).
  void randomize(Rng& rng, double lo = -1.0, double hi = 1.0);
  void fill(double value);

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<MipLayout> mips_;
  std::vector<double> params_;
};

/// Decodes one mip to RGB texels: texel = (1-a) e0 + a e1 with a and the
/// endpoints quantized per `mode`.
LatentImage decode_trainable(const TrainableLatentTexture& t, int level,
                             QuantMode mode = QuantMode::Quantized, Exec exec = Exec::Serial);

/// Accumulates d(loss)/d(raw params) into `grad_params` (same layout as
/// t.params()) given d(loss)/d(texel) for one mip. Uses the smooth-path
/// Jacobian, which is what the straight-through estimator prescribes.
void decode_trainable_backward(const TrainableLatentTexture& t, int level,
                               std::span<const double> grad_rgb, std::span<double> grad_params,
                               Exec exec = Exec::Serial);

struct ExportStats {
  std::size_t blocks = 0;
  std::size_t degenerate_blocks = 0;
};

/// BC1 blocks of every mip, row-major block order per mip.
using BlockChain = std::vector<std::vector<bc1::Block>>;

/// Freezes the quantized state into BC1 blocks. Decoding the result gives
/// exactly decode_trainable(t, level, Quantized) for every level.
BlockChain export_to_bc1(const TrainableLatentTexture& t, ExportStats* stats = nullptr);

/// Decodes a block chain back into latent images. Block grid of level l is
/// derived from the base dimensions.
LatentChain decode_blocks(const BlockChain& chain, int width, int height);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  AdamState(std::size_t size, AdamConfig config) : config_(config), m_(size, 0.0), v_(size, 0.0) {}

  const AdamConfig& config() const { return config_; }
  std::int64_t step() const { return step_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

  friend void adam_step(std::span<double>, std::span<const double>, AdamState&);

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t step_ = 0;
};

/// One bias-corrected Adam update. Throws std::invalid_argument on shape mismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace nbtc::qat
