#pragma once

#include <cstddef>
#include <vector>

namespace nbtc {

/// One decoded mip level of a latent texture: interleaved RGB, row-major.
struct LatentImage {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;

  LatentImage() = default;
  LatentImage(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0.0) {}

  std::size_t texel_offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width + x) * 3;
  }
  double* texel(int x, int y) { return rgb.data() + texel_offset(x, y); }
  const double* texel(int x, int y) const { return rgb.data() + texel_offset(x, y); }

  friend bool operator==(const LatentImage&, const LatentImage&) = default;
};

/// Mip chain of one latent texture, finest first.
using LatentChain = std::vector<LatentImage>;

/// Number of latent mips so the coarsest level still holds a full 4x4 block:
/// floor(log2(min(w, h))) - 1, at least 1.
int latent_mip_count(int width, int height);

}  // namespace nbtc
