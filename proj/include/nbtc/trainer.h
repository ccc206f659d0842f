#pragma once

// Compression loop: sample (uv, lod) batches, fetch trilinear references,
// decode through latents + MLP, L1 loss, backpropagate through the MLP, the
// trilinear/bilinear fetch and the straight-through quantizer, and update the
// two parameter groups with separate Adam optimizers.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "nbtc/mlp.h"
#include "nbtc/parallel.h"
#include "nbtc/pyramid.h"
#include "nbtc/qat.h"
#include "nbtc/rng.h"
#include "nbtc/texture_set.h"

namespace nbtc {

struct TrainingPoint {
  double u = 0.0;
  double v = 0.0;
  double lod = 0.0;
};

/// uv uniform in [0,1)^2; lod = -log2(s) with s uniform in (2^-max_lod, 1],
/// which favours fine levels while covering [0, max_lod].
TrainingPoint sample_training_point(Rng& rng, double max_lod);

/// Mean of the lod distribution above, in closed form.
double training_lod_mean(double max_lod);

struct TrainConfig {
  Variant variant = Variant::A;
  int hidden_dim = 32;
  int hidden_layers = 1;
  int steps = 1000;
  int batch_size = 1 << 14;
  double lr_mlp = 1e-3;
  double lr_latent = 1e-2;
  std::uint64_t seed = 1;
  qat::QuantMode quant_mode = qat::QuantMode::Quantized;
  Exec exec = Exec::Parallel;
};

struct TrainLogEntry {
  int step = 0;
  double loss = 0.0;
  double lr_mlp = 0.0;
  double lr_latent = 0.0;
};

/// Formats one log line: "step loss lr_mlp lr_latent".
void write_log_line(std::ostream& os, const TrainLogEntry& e);

struct TrainResult {
  CompressedPyramid compressed;
  LatentPyramid pyramid;  // decode of `compressed`
  MlpDecoder mlp;
  std::vector<TrainLogEntry> log;
  qat::ExportStats export_stats;
};

/// Gradients of the batch loss for every parameter group.
struct BatchGradients {
  double loss = 0.0;
  std::vector<double> mlp;
  std::array<std::vector<double>, kLatentTextures> latent;
};

class Trainer {
 public:
  /// Throws InputError when the texture set dimensions are unsupported or
  /// the config is invalid.
  Trainer(const TextureSet& reference, const TrainConfig& config);

  const TrainConfig& config() const { return config_; }
  TrainablePyramid& latents() { return latents_; }
  const TrainablePyramid& latents() const { return latents_; }
  MlpDecoder& mlp() { return mlp_; }
  const MlpDecoder& mlp() const { return mlp_; }
  int steps_done() const { return steps_done_; }

  std::vector<TrainingPoint> sample_batch();

  /// Mean L1 loss over the batch and all nine channels, with exact gradients
  /// (straight-through for the quantizers).
  BatchGradients loss_and_gradients(std::span<const TrainingPoint> batch, Exec exec) const;

  /// Samples a batch, computes gradients and applies both Adam updates.
  /// Throws TrainingDiverged on a non-finite loss or gradient.
  TrainLogEntry step();

  TrainResult finish() const;

 private:
  const TextureSet& reference_;
  TrainConfig config_;
  Rng rng_;
  TrainablePyramid latents_;
  MlpDecoder mlp_;
  qat::AdamState mlp_adam_;
  std::array<qat::AdamState, kLatentTextures> latent_adam_;
  int steps_done_ = 0;
};

/// Runs cfg.steps iterations; each log entry is also written to `log_stream`
/// when given.
TrainResult train(const TextureSet& reference, const TrainConfig& config,
                  std::ostream* log_stream = nullptr);

}  // namespace nbtc
