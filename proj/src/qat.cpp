#include "nbtc/qat.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nbtc {

int latent_mip_count(int width, int height) {
  const int m = std::min(width, height);
  int log2m = 0;
  while ((2 << log2m) <= m) ++log2m;
  return std::max(1, log2m - 1);
}

}  // namespace nbtc

namespace nbtc::qat {

int quant_code(double x, int bits) {
  const double levels = static_cast<double>((1 << bits) - 1);
  x = std::clamp(x, 0.0, 1.0);
  return static_cast<int>(std::round(x * levels));
}

double quant(double x, int bits) {
  return static_cast<double>(quant_code(x, bits)) / static_cast<double>((1 << bits) - 1);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

TrainableLatentTexture::TrainableLatentTexture(int width, int height, int mip_count)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0 || mip_count <= 0) {
    throw std::invalid_argument("latent texture needs positive dimensions and mip count");
  }
  std::size_t offset = 0;
  for (int level = 0; level < mip_count; ++level) {
    MipLayout m;
    m.width = std::max(1, width >> level);
    m.height = std::max(1, height >> level);
    m.blocks_x = (m.width + 3) / 4;
    m.blocks_y = (m.height + 3) / 4;
    const auto blocks = static_cast<std::size_t>(m.block_count());
    m.endpoint0 = offset;
    offset += blocks * 3;
    m.endpoint1 = offset;
    offset += blocks * 3;
    m.alpha = offset;
    offset += static_cast<std::size_t>(m.width) * m.height;
    mips_.push_back(m);
  }
  params_.assign(offset, 0.0);
}

std::span<double> TrainableLatentTexture::endpoint0(int level) {
  const auto& m = mip(level);
  return std::span<double>(params_).subspan(m.endpoint0, m.block_count() * 3);
}
std::span<double> TrainableLatentTexture::endpoint1(int level) {
  const auto& m = mip(level);
  return std::span<double>(params_).subspan(m.endpoint1, m.block_count() * 3);
}
std::span<double> TrainableLatentTexture::alpha(int level) {
  const auto& m = mip(level);
  return std::span<double>(params_).subspan(m.alpha, static_cast<std::size_t>(m.width) * m.height);
}
std::span<const double> TrainableLatentTexture::endpoint0(int level) const {
  const auto& m = mip(level);
  return std::span<const double>(params_).subspan(m.endpoint0, m.block_count() * 3);
}
std::span<const double> TrainableLatentTexture::endpoint1(int level) const {
  const auto& m = mip(level);
  return std::span<const double>(params_).subspan(m.endpoint1, m.block_count() * 3);
}
std::span<const double> TrainableLatentTexture::alpha(int level) const {
  const auto& m = mip(level);
  return std::span<const double>(params_).subspan(m.alpha, static_cast<std::size_t>(m.width) * m.height);
}

void TrainableLatentTexture::randomize(Rng& rng, double lo, double hi) {
  for (double& p : params_) p = rng.uniform(lo, hi);
}

void TrainableLatentTexture::fill(double value) { std::fill(params_.begin(), params_.end(), value); }

namespace {

bc1::Rgb565 endpoint_codes(const double* raw) {
  return {static_cast<std::uint8_t>(quant_code(sigmoid(raw[0]), kEndpointBits[0])),
          static_cast<std::uint8_t>(quant_code(sigmoid(raw[1]), kEndpointBits[1])),
          static_cast<std::uint8_t>(quant_code(sigmoid(raw[2]), kEndpointBits[2]))};
}

void decode_block_row(const TrainableLatentTexture& t, int level, QuantMode mode, int by,
                      LatentImage& out) {
  const MipLayout& m = t.mip(level);
  const auto e0 = t.endpoint0(level);
  const auto e1 = t.endpoint1(level);
  const auto alpha = t.alpha(level);
  for (int bx = 0; bx < m.blocks_x; ++bx) {
    const std::size_t b = static_cast<std::size_t>(by) * m.blocks_x + bx;
    const double* raw0 = e0.data() + 3 * b;
    const double* raw1 = e1.data() + 3 * b;
    if (mode == QuantMode::Quantized) {
      const bc1::Rgb8 c0 = bc1::expand_565(endpoint_codes(raw0));
      const bc1::Rgb8 c1 = bc1::expand_565(endpoint_codes(raw1));
      for (int y = by * 4; y < std::min(m.height, by * 4 + 4); ++y) {
        for (int x = bx * 4; x < std::min(m.width, bx * 4 + 4); ++x) {
          const auto k = static_cast<bc1::AlphaLevel>(
              quant_code(sigmoid(alpha[static_cast<std::size_t>(y) * m.width + x]), kAlphaBits));
          const bc1::RgbF v = bc1::interpolate(c0, c1, k);
          double* dst = out.texel(x, y);
          dst[0] = v[0];
          dst[1] = v[1];
          dst[2] = v[2];
        }
      }
    } else {
      const double s0[3] = {sigmoid(raw0[0]), sigmoid(raw0[1]), sigmoid(raw0[2])};
      const double s1[3] = {sigmoid(raw1[0]), sigmoid(raw1[1]), sigmoid(raw1[2])};
      for (int y = by * 4; y < std::min(m.height, by * 4 + 4); ++y) {
        for (int x = bx * 4; x < std::min(m.width, bx * 4 + 4); ++x) {
          const double a = sigmoid(alpha[static_cast<std::size_t>(y) * m.width + x]);
          double* dst = out.texel(x, y);
          for (int c = 0; c < 3; ++c) dst[c] = (1.0 - a) * s0[c] + a * s1[c];
        }
      }
    }
  }
}

void backward_block_row(const TrainableLatentTexture& t, int level, int by,
                        std::span<const double> grad_rgb, std::span<double> grad) {
  const MipLayout& m = t.mip(level);
  const auto e0 = t.endpoint0(level);
  const auto e1 = t.endpoint1(level);
  const auto alpha = t.alpha(level);
  for (int bx = 0; bx < m.blocks_x; ++bx) {
    const std::size_t b = static_cast<std::size_t>(by) * m.blocks_x + bx;
    double s0[3], s1[3];
    for (int c = 0; c < 3; ++c) {
      s0[c] = sigmoid(e0[3 * b + c]);
      s1[c] = sigmoid(e1[3 * b + c]);
    }
    double g0[3] = {0, 0, 0};
    double g1[3] = {0, 0, 0};
    for (int y = by * 4; y < std::min(m.height, by * 4 + 4); ++y) {
      for (int x = bx * 4; x < std::min(m.width, bx * 4 + 4); ++x) {
        const std::size_t ti = static_cast<std::size_t>(y) * m.width + x;
        const double a = sigmoid(alpha[ti]);
        const double* g = grad_rgb.data() + 3 * ti;
        double ga = 0.0;
        for (int c = 0; c < 3; ++c) {
          ga += g[c] * (s1[c] - s0[c]);
          g0[c] += g[c] * (1.0 - a);
          g1[c] += g[c] * a;
        }
        grad[m.alpha + ti] += ga * sigmoid_grad_from_output(a);
      }
    }
    for (int c = 0; c < 3; ++c) {
      grad[m.endpoint0 + 3 * b + c] += g0[c] * sigmoid_grad_from_output(s0[c]);
      grad[m.endpoint1 + 3 * b + c] += g1[c] * sigmoid_grad_from_output(s1[c]);
    }
  }
}

}  // namespace

LatentImage decode_trainable(const TrainableLatentTexture& t, int level, QuantMode mode, Exec exec) {
  const MipLayout& m = t.mip(level);
  LatentImage out(m.width, m.height);
  if (exec == Exec::Serial) {
    for (int by = 0; by < m.blocks_y; ++by) decode_block_row(t, level, mode, by, out);
  } else {
#pragma omp parallel for schedule(static)
    for (int by = 0; by < m.blocks_y; ++by) decode_block_row(t, level, mode, by, out);
  }
  return out;
}

void decode_trainable_backward(const TrainableLatentTexture& t, int level,
                               std::span<const double> grad_rgb, std::span<double> grad_params,
                               Exec exec) {
  const MipLayout& m = t.mip(level);
  if (grad_rgb.size() != static_cast<std::size_t>(m.width) * m.height * 3 ||
      grad_params.size() != t.params().size()) {
    throw std::invalid_argument("decode_trainable_backward: gradient shape mismatch");
  }
  // Each block row owns disjoint parameters, so the parallel loop is race free
  // and produces the same sums as the serial one.
  if (exec == Exec::Serial) {
    for (int by = 0; by < m.blocks_y; ++by) backward_block_row(t, level, by, grad_rgb, grad_params);
  } else {
#pragma omp parallel for schedule(static)
    for (int by = 0; by < m.blocks_y; ++by) backward_block_row(t, level, by, grad_rgb, grad_params);
  }
}

BlockChain export_to_bc1(const TrainableLatentTexture& t, ExportStats* stats) {
  BlockChain chain;
  ExportStats local;
  for (int level = 0; level < t.mip_count(); ++level) {
    const MipLayout& m = t.mip(level);
    const auto e0 = t.endpoint0(level);
    const auto e1 = t.endpoint1(level);
    const auto alpha = t.alpha(level);
    std::vector<bc1::Block> blocks(static_cast<std::size_t>(m.block_count()));
    for (int by = 0; by < m.blocks_y; ++by) {
      for (int bx = 0; bx < m.blocks_x; ++bx) {
        const std::size_t b = static_cast<std::size_t>(by) * m.blocks_x + bx;
        std::array<bc1::AlphaLevel, bc1::kTexelsPerBlock> levels{};
        for (int y = 0; y < 4; ++y) {
          for (int x = 0; x < 4; ++x) {
            const int tx = bx * 4 + x;
            const int ty = by * 4 + y;
            if (tx >= m.width || ty >= m.height) continue;
            levels[4 * y + x] = static_cast<bc1::AlphaLevel>(
                quant_code(sigmoid(alpha[static_cast<std::size_t>(ty) * m.width + tx]), kAlphaBits));
          }
        }
        const auto r = bc1::encode_block(endpoint_codes(e0.data() + 3 * b),
                                         endpoint_codes(e1.data() + 3 * b), levels);
        blocks[b] = r.block;
        ++local.blocks;
        if (r.degenerate) ++local.degenerate_blocks;
      }
    }
    chain.push_back(std::move(blocks));
  }
  if (stats != nullptr) *stats = local;
  return chain;
}

LatentChain decode_blocks(const BlockChain& chain, int width, int height) {
  LatentChain out;
  for (std::size_t level = 0; level < chain.size(); ++level) {
    const int w = std::max(1, width >> level);
    const int h = std::max(1, height >> level);
    const int bxs = (w + 3) / 4;
    const int bys = (h + 3) / 4;
    if (chain[level].size() != static_cast<std::size_t>(bxs) * bys) {
      throw std::invalid_argument("decode_blocks: block count does not match mip dimensions");
    }
    LatentImage img(w, h);
    for (int by = 0; by < bys; ++by) {
      for (int bx = 0; bx < bxs; ++bx) {
        const bc1::DecodedBlock d = bc1::decode_block(chain[level][static_cast<std::size_t>(by) * bxs + bx]);
        for (int y = 0; y < 4; ++y) {
          for (int x = 0; x < 4; ++x) {
            if (bx * 4 + x >= w || by * 4 + y >= h) continue;
            double* dst = img.texel(bx * 4 + x, by * 4 + y);
            const auto& v = d.at(x, y);
            dst[0] = v[0];
            dst[1] = v[1];
            dst[2] = v[2];
          }
        }
      }
    }
    out.push_back(std::move(img));
  }
  return out;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m_.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and moment sizes differ");
  }
  const AdamConfig& c = state.config_;
  ++state.step_;
  const double t = static_cast<double>(state.step_);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m_[i] = c.beta1 * state.m_[i] + (1.0 - c.beta1) * g;
    state.v_[i] = c.beta2 * state.v_[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = state.m_[i] / correction1;
    const double v_hat = state.v_[i] / correction2;
    params[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

}  // namespace nbtc::qat
