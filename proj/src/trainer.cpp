#include "nbtc/trainer.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "nbtc/error.h"

namespace nbtc {

TrainingPoint sample_training_point(Rng& rng, double max_lod) {
  TrainingPoint p;
  p.u = rng.uniform();
  p.v = rng.uniform();
  if (max_lod <= 0.0) return p;
  const double lo = std::exp2(-max_lod);
  const double s = 1.0 - rng.uniform() * (1.0 - lo);  // (lo, 1]
  p.lod = std::clamp(-std::log2(s), 0.0, max_lod);
  return p;
}

double training_lod_mean(double max_lod) {
  if (max_lod <= 0.0) return 0.0;
  const double tail = std::exp2(-max_lod);
  return ((1.0 - tail) / std::numbers::ln2 - max_lod * tail) / (1.0 - tail);
}

void write_log_line(std::ostream& os, const TrainLogEntry& e) {
  const auto old = os.precision(17);
  os << e.step << ' ' << e.loss << ' ' << e.lr_mlp << ' ' << e.lr_latent << '\n';
  os.precision(old);
}

Trainer::Trainer(const TextureSet& reference, const TrainConfig& config)
    : reference_(reference), config_(config), rng_(config.seed) {
  try {
    validate_base_dimensions(reference.width(), reference.height());
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  if (config.batch_size < 1) throw InputError("batch size must be >= 1");
  if (!(config.lr_mlp > 0.0) || !(config.lr_latent > 0.0)) throw InputError("learning rates must be positive");
  if (config.steps < 0) throw InputError("step count must be >= 0");

  latents_ = TrainablePyramid::create(config.variant, reference.width(), reference.height());
  for (auto& t : latents_.textures) t.randomize(rng_, -1.0, 1.0);
  try {
    mlp_ = MlpDecoder(config.hidden_dim, config.hidden_layers);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  mlp_.init_uniform(rng_);

  mlp_adam_ = qat::AdamState(mlp_.param_count(), {.lr = config.lr_mlp});
  for (int k = 0; k < kLatentTextures; ++k) {
    latent_adam_[k] = qat::AdamState(latents_.textures[k].params().size(), {.lr = config.lr_latent});
  }
}

std::vector<TrainingPoint> Trainer::sample_batch() {
  std::vector<TrainingPoint> batch(static_cast<std::size_t>(config_.batch_size));
  for (auto& p : batch) p = sample_training_point(rng_, reference_.max_lod());
  return batch;
}

namespace {

constexpr std::size_t kChunk = 256;

struct ChunkPartial {
  double loss = 0.0;
  std::vector<double> mlp;
};

}  // namespace

BatchGradients Trainer::loss_and_gradients(std::span<const TrainingPoint> batch, Exec exec) const {
  const LatentPyramid decoded = latents_.decode(config_.quant_mode, exec);
  const std::size_t n = batch.size();
  const double scale = 1.0 / (static_cast<double>(n) * kFeatureChannels);

  std::vector<LatentFootprint> footprints(n);
  std::vector<double> grad_x(n * kMlpInputs);
  const auto chunks = static_cast<std::int64_t>((n + kChunk - 1) / kChunk);
  std::vector<ChunkPartial> partials(static_cast<std::size_t>(chunks));

  // Each chunk owns its partial sums and its slice of footprints / grad_x, so
  // results do not depend on how chunks are spread over threads.
  const auto run_chunk = [&](std::int64_t c) {
    ChunkPartial& part = partials[static_cast<std::size_t>(c)];
    part.mlp.assign(mlp_.param_count(), 0.0);
    MlpCache cache;
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(n, begin + kChunk);
    for (std::size_t i = begin; i < end; ++i) {
      const TrainingPoint& p = batch[i];
      const LatentVector x = sample_latents(decoded, p.u, p.v, p.lod, &footprints[i]);
      const FeatureVector ref = reference_fetch(reference_, p.u, p.v, p.lod);
      const MlpOutput y = forward(mlp_, x, cache);
      MlpOutput upstream{};
      for (int ch = 0; ch < kFeatureChannels; ++ch) {
        const double d = y[ch] - ref[ch];
        part.loss += std::abs(d);
        upstream[ch] = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
      }
      backward(mlp_, cache, upstream, part.mlp,
               std::span<double, kMlpInputs>(grad_x.data() + i * kMlpInputs, kMlpInputs));
    }
  };
  if (exec == Exec::Serial) {
    for (std::int64_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t c = 0; c < chunks; ++c) run_chunk(c);
  }

  BatchGradients out;
  out.mlp.assign(mlp_.param_count(), 0.0);
  double loss_sum = 0.0;
  for (const auto& part : partials) {
    loss_sum += part.loss;
    for (std::size_t j = 0; j < out.mlp.size(); ++j) out.mlp[j] += part.mlp[j];
  }
  out.loss = loss_sum * scale;

  // Latent texel gradients, scattered in sample order per texture, then
  // pulled back through the decode.
  LatentGradients grids = zero_gradients_like(decoded);
  const auto per_texture = [&](int k) {
    for (std::size_t i = 0; i < n; ++i) {
      scatter_texture_gradient(footprints[i][k], grad_x.data() + i * kMlpInputs + 3 * k, grids[k]);
    }
    const auto& tex = latents_.textures[k];
    out.latent[k].assign(tex.params().size(), 0.0);
    for (int level = 0; level < tex.mip_count(); ++level) {
      qat::decode_trainable_backward(tex, level, grids[k][level], out.latent[k], Exec::Serial);
    }
  };
  if (exec == Exec::Serial) {
    for (int k = 0; k < kLatentTextures; ++k) per_texture(k);
  } else {
#pragma omp parallel for schedule(static)
    for (int k = 0; k < kLatentTextures; ++k) per_texture(k);
  }
  return out;
}

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

TrainLogEntry Trainer::step() {
  const std::vector<TrainingPoint> batch = sample_batch();
  BatchGradients g = loss_and_gradients(batch, config_.exec);
  if (!std::isfinite(g.loss)) throw TrainingDiverged(steps_done_, "loss");
  if (!all_finite(g.mlp)) throw TrainingDiverged(steps_done_, "mlp");
  for (int k = 0; k < kLatentTextures; ++k) {
    if (!all_finite(g.latent[k])) throw TrainingDiverged(steps_done_, "latent" + std::to_string(k));
  }
  qat::adam_step(mlp_.params(), g.mlp, mlp_adam_);
  for (int k = 0; k < kLatentTextures; ++k) {
    qat::adam_step(latents_.textures[k].params(), g.latent[k], latent_adam_[k]);
  }
  if (!all_finite(mlp_.params())) throw TrainingDiverged(steps_done_, "mlp");
  TrainLogEntry e{steps_done_, g.loss, config_.lr_mlp, config_.lr_latent};
  ++steps_done_;
  return e;
}

TrainResult Trainer::finish() const {
  TrainResult r;
  r.compressed = export_pyramid(latents_, &r.export_stats);
  r.pyramid = r.compressed.decode();
  r.mlp = mlp_;
  return r;
}

TrainResult train(const TextureSet& reference, const TrainConfig& config, std::ostream* log_stream) {
  Trainer trainer(reference, config);
  std::vector<TrainLogEntry> log;
  log.reserve(static_cast<std::size_t>(config.steps));
  for (int s = 0; s < config.steps; ++s) {
    log.push_back(trainer.step());
    if (log_stream != nullptr) write_log_line(*log_stream, log.back());
  }
  TrainResult r = trainer.finish();
  r.log = std::move(log);
  return r;
}

}  // namespace nbtc
