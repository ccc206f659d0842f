#include "nbtc/mlp.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nbtc {

MlpDecoder::MlpDecoder(int hidden_dim, int hidden_layers)
    : hidden_dim_(hidden_dim), hidden_layers_(hidden_layers) {
  if (hidden_dim < 1 || hidden_layers < 1) {
    throw std::invalid_argument("MLP needs hidden_dim >= 1 and at least one hidden layer");
  }
  std::size_t offset = 0;
  int in = kMlpInputs;
  for (int l = 0; l <= hidden_layers; ++l) {
    const int out = l == hidden_layers ? kMlpOutputs : hidden_dim;
    Layer L{in, out, offset, offset + static_cast<std::size_t>(in) * out};
    offset = L.bias + out;
    layers_.push_back(L);
    in = out;
  }
  params_.assign(offset, 0.0);
}

std::size_t mlp_param_count(int hidden_dim, int hidden_layers) {
  return MlpDecoder(hidden_dim, hidden_layers).param_count();
}

void MlpDecoder::init_uniform(Rng& rng) {
  for (const Layer& L : layers_) {
    const double bound = std::sqrt(1.0 / L.inputs);
    for (std::size_t i = 0; i < static_cast<std::size_t>(L.inputs) * L.outputs; ++i) {
      params_[L.weights + i] = rng.uniform(-bound, bound);
    }
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(L.bias), L.outputs, 0.0);
  }
}

namespace {

// out[o] = b[o] + sum_i w[o][i] * in[i], accumulated in index order.
template <typename T>
void affine(const MlpDecoder::Layer& L, const T* params, const T* in, T* out) {
  for (int o = 0; o < L.outputs; ++o) {
    const T* w = params + L.weights + static_cast<std::size_t>(o) * L.inputs;
    T acc = params[L.bias + o];
    for (int i = 0; i < L.inputs; ++i) acc += w[i] * in[i];
    out[o] = acc;
  }
}

}  // namespace

MlpOutput forward(const MlpDecoder& m, std::span<const double, kMlpInputs> x) {
  MlpCache cache;
  return forward(m, x, cache);
}

MlpOutput forward(const MlpDecoder& m, std::span<const double, kMlpInputs> x, MlpCache& cache) {
  const int n = m.layer_count();
  cache.inputs.resize(n);
  cache.pre.resize(n - 1);
  cache.inputs[0].assign(x.begin(), x.end());
  MlpOutput y{};
  for (int l = 0; l < n; ++l) {
    const auto& L = m.layer(l);
    if (l + 1 < n) {
      auto& pre = cache.pre[l];
      pre.resize(L.outputs);
      affine(L, m.params().data(), cache.inputs[l].data(), pre.data());
      auto& next = cache.inputs[l + 1];
      next.resize(L.outputs);
      for (int o = 0; o < L.outputs; ++o) next[o] = pre[o] > 0.0 ? pre[o] : 0.0;
    } else {
      affine(L, m.params().data(), cache.inputs[l].data(), y.data());
    }
  }
  return y;
}

void backward(const MlpDecoder& m, const MlpCache& cache, std::span<const double, kMlpOutputs> upstream,
              std::span<double> grad_params, std::span<double, kMlpInputs> grad_x) {
  if (grad_params.size() != m.param_count()) {
    throw std::invalid_argument("backward: gradient buffer does not match parameter count");
  }
  // Per-thread scratch; backward runs once per training sample.
  thread_local std::vector<double> delta, below;
  delta.assign(upstream.begin(), upstream.end());
  const auto params = m.params();
  for (int l = m.layer_count() - 1; l >= 0; --l) {
    const auto& L = m.layer(l);
    const double* in = cache.inputs[l].data();
    below.assign(L.inputs, 0.0);
    double* bl = below.data();
    for (int o = 0; o < L.outputs; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      double* gw = grad_params.data() + L.weights + static_cast<std::size_t>(o) * L.inputs;
      const double* w = params.data() + L.weights + static_cast<std::size_t>(o) * L.inputs;
      for (int i = 0; i < L.inputs; ++i) gw[i] += d * in[i];
      for (int i = 0; i < L.inputs; ++i) bl[i] += d * w[i];
      grad_params[L.bias + o] += d;
    }
    if (l > 0) {
      const auto& pre = cache.pre[l - 1];
      for (int i = 0; i < L.inputs; ++i) {
        if (pre[i] <= 0.0) bl[i] = 0.0;
      }
    }
    delta.swap(below);
  }
  std::copy(delta.begin(), delta.end(), grad_x.begin());
}

namespace {

constexpr int kRowBlock = 32;

// Rows [r0, r1) through all layers. Loops are ordered so each row sees the
// same accumulation sequence as affine().
template <typename T>
void forward_rows(std::span<const MlpDecoder::Layer> layers, const T* params, const T* x, T* y,
                  std::size_t r0, std::size_t r1, int width) {
  const auto rows = static_cast<int>(r1 - r0);
  std::vector<T> a(static_cast<std::size_t>(kRowBlock) * width);
  std::vector<T> b(static_cast<std::size_t>(kRowBlock) * width);
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < kMlpInputs; ++i) a[static_cast<std::size_t>(r) * width + i] = x[(r0 + r) * kMlpInputs + i];
  }
  const auto n = static_cast<int>(layers.size());
  for (int l = 0; l < n; ++l) {
    const auto& L = layers[l];
    for (int o = 0; o < L.outputs; ++o) {
      const T* w = params + L.weights + static_cast<std::size_t>(o) * L.inputs;
      T acc[kRowBlock];
      for (int r = 0; r < rows; ++r) acc[r] = params[L.bias + o];
      for (int i = 0; i < L.inputs; ++i) {
        const T wi = w[i];
        for (int r = 0; r < rows; ++r) acc[r] += wi * a[static_cast<std::size_t>(r) * width + i];
      }
      if (l + 1 < n) {
        for (int r = 0; r < rows; ++r) b[static_cast<std::size_t>(r) * width + o] = acc[r] > T(0) ? acc[r] : T(0);
      } else {
        for (int r = 0; r < rows; ++r) y[(r0 + r) * kMlpOutputs + o] = acc[r];
      }
    }
    a.swap(b);
  }
}

template <typename T>
void forward_batch_impl(std::span<const MlpDecoder::Layer> layers, const T* params, std::span<const T> x,
                        std::span<T> y, Exec exec) {
  if (x.size() % kMlpInputs != 0 || y.size() * kMlpInputs != x.size() * kMlpOutputs) {
    throw std::invalid_argument("forward_batch: X must be N x 12 and Y N x 9");
  }
  int width = kMlpInputs;
  for (const auto& L : layers) width = std::max(width, L.outputs);
  const std::size_t n = x.size() / kMlpInputs;
  const auto blocks = static_cast<std::int64_t>((n + kRowBlock - 1) / kRowBlock);
  if (exec == Exec::Serial) {
    for (std::int64_t blk = 0; blk < blocks; ++blk) {
      const std::size_t r0 = static_cast<std::size_t>(blk) * kRowBlock;
      forward_rows(layers, params, x.data(), y.data(), r0, std::min(n, r0 + kRowBlock), width);
    }
  } else {
#pragma omp parallel for schedule(static)
    for (std::int64_t blk = 0; blk < blocks; ++blk) {
      const std::size_t r0 = static_cast<std::size_t>(blk) * kRowBlock;
      forward_rows(layers, params, x.data(), y.data(), r0, std::min(n, r0 + kRowBlock), width);
    }
  }
}

}  // namespace

void forward_batch(const MlpDecoder& m, std::span<const double> x, std::span<double> y, Exec exec) {
  std::vector<MlpDecoder::Layer> layers;
  for (int l = 0; l < m.layer_count(); ++l) layers.push_back(m.layer(l));
  forward_batch_impl<double>(layers, m.params().data(), x, y, exec);
}

MlpDecoderF32::MlpDecoderF32(const MlpDecoder& m) {
  for (int l = 0; l < m.layer_count(); ++l) layers_.push_back(m.layer(l));
  params_.assign(m.params().begin(), m.params().end());
}

void forward_batch(const MlpDecoderF32& m, std::span<const float> x, std::span<float> y, Exec exec) {
  std::vector<MlpDecoder::Layer> layers;
  for (int l = 0; l < m.layer_count(); ++l) layers.push_back(m.layer(l));
  forward_batch_impl<float>(layers, m.params().data(), x, y, exec);
}

}  // namespace nbtc
