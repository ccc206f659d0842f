#pragma once

// Decoder f: 12 latent channels -> 9 material channels. Hidden layers are
// affine + ReLU, the output layer is affine with no activation.

#include <array>
#include <span>
#include <vector>

#include "nbtc/parallel.h"
#include "nbtc/rng.h"

namespace nbtc {

inline constexpr int kMlpInputs = 12;
inline constexpr int kMlpOutputs = 9;

using MlpInput = std::array<double, kMlpInputs>;
using MlpOutput = std::array<double, kMlpOutputs>;

class MlpDecoder {
 public:
  struct Layer {
    int inputs = 0;
    int outputs = 0;
    std::size_t weights = 0;  // offset of outputs x inputs, row-major
    std::size_t bias = 0;     // offset of outputs
    friend bool operator==(const Layer&, const Layer&) = default;
  };

  MlpDecoder() = default;
  /// All parameters zero. Throws std::invalid_argument for hidden_dim < 1 or
  /// hidden_layers < 1.
  MlpDecoder(int hidden_dim, int hidden_layers = 1);

  int hidden_dim() const { return hidden_dim_; }
  int hidden_layers() const { return hidden_layers_; }
  int layer_count() const { return static_cast<int>(layers_.size()); }
  const Layer& layer(int i) const { return layers_.at(i); }

  /// Flat parameters: per layer, weights then bias.
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  double weight(int l, int out, int in) const {
    const Layer& L = layers_[l];
    return params_[L.weights + static_cast<std::size_t>(out) * L.inputs + in];
  }
  double bias(int l, int out) const { return params_[layers_[l].bias + out]; }

  /// Weights uniform in +-sqrt(1/fan_in), biases zero.
  void init_uniform(Rng& rng);

  friend bool operator==(const MlpDecoder&, const MlpDecoder&) = default;

 private:
  int hidden_dim_ = 0;
  int hidden_layers_ = 0;
  std::vector<Layer> layers_;
  std::vector<double> params_;
};

/// Parameter count for a decoder with the given shape.
std::size_t mlp_param_count(int hidden_dim, int hidden_layers = 1);

/// Activations kept by forward for backward: inputs to every layer (after
/// ReLU for hidden layers) and hidden pre-activations.
struct MlpCache {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> pre;
};

MlpOutput forward(const MlpDecoder& m, std::span<const double, kMlpInputs> x);
MlpOutput forward(const MlpDecoder& m, std::span<const double, kMlpInputs> x, MlpCache& cache);

/// Reverse-mode pass. Accumulates parameter gradients into `grad_params`
/// (size param_count()) and writes d(loss)/dx into `grad_x`.
void backward(const MlpDecoder& m, const MlpCache& cache, std::span<const double, kMlpOutputs> upstream,
              std::span<double> grad_params, std::span<double, kMlpInputs> grad_x);

/// Row-blocked batched inference. X is N x 12, Y is N x 9, both row-major.
/// Each row is bit-identical to forward() on that row.
void forward_batch(const MlpDecoder& m, std::span<const double> x, std::span<double> y,
                   Exec exec = Exec::Serial);

/// Single-precision copy of a decoder for inference.
class MlpDecoderF32 {
 public:
  explicit MlpDecoderF32(const MlpDecoder& m);
  const MlpDecoder::Layer& layer(int i) const { return layers_.at(i); }
  int layer_count() const { return static_cast<int>(layers_.size()); }
  std::span<const float> params() const { return params_; }

 private:
  std::vector<MlpDecoder::Layer> layers_;
  std::vector<float> params_;
};

void forward_batch(const MlpDecoderF32& m, std::span<const float> x, std::span<float> y,
                   Exec exec = Exec::Serial);

}  // namespace nbtc
