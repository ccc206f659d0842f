#pragma once

// BC1 (DXT1) blocks in 4-color mode, laid out as in the Khronos Data Format
// specification: two RGB565 endpoints followed by sixteen 2-bit indices.

#include <array>
#include <cstdint>
#include <span>

namespace nbtc::bc1 {

inline constexpr std::size_t kBlockBytes = 8;
inline constexpr int kBlockDim = 4;
inline constexpr int kTexelsPerBlock = 16;

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

/// Endpoint quantization codes: 5-bit red, 6-bit green, 5-bit blue.
struct Rgb565 {
  std::uint8_t r = 0, g = 0, b = 0;

  std::uint16_t pack() const {
    return static_cast<std::uint16_t>(((r & 0x1F) << 11) | ((g & 0x3F) << 5) | (b & 0x1F));
  }
  static Rgb565 unpack(std::uint16_t v) {
    return {static_cast<std::uint8_t>((v >> 11) & 0x1F),
            static_cast<std::uint8_t>((v >> 5) & 0x3F),
            static_cast<std::uint8_t>(v & 0x1F)};
  }
  friend bool operator==(const Rgb565&, const Rgb565&) = default;
};

/// Interpolation level k of a texel: alpha = k/3 along the e0 -> e1 segment.
/// Distinct from the BC1 index stored in the block (see to_index).
using AlphaLevel = std::uint8_t;

/// BC1 index for an alpha level: 0->0, 1/3->2, 2/3->3, 1->1.
constexpr std::uint8_t to_index(AlphaLevel k) {
  constexpr std::uint8_t table[4] = {0, 2, 3, 1};
  return table[k & 3];
}
constexpr AlphaLevel to_level(std::uint8_t index) {
  constexpr AlphaLevel table[4] = {0, 3, 1, 2};
  return table[index & 3];
}

struct Block {
  std::uint16_t e0 = 0;
  std::uint16_t e1 = 0;
  std::uint32_t indices = 0;

  bool four_color() const { return e0 > e1; }

  std::uint8_t index(int x, int y) const {
    return static_cast<std::uint8_t>((indices >> (2 * (4 * y + x))) & 3u);
  }
  void set_index(int x, int y, std::uint8_t idx) {
    const int shift = 2 * (4 * y + x);
    indices = (indices & ~(3u << shift)) | (static_cast<std::uint32_t>(idx & 3u) << shift);
  }

  friend bool operator==(const Block&, const Block&) = default;
};

using RgbF = std::array<double, 3>;

/// Row-major 4x4 texels, channels in [0,1].
struct DecodedBlock {
  std::array<RgbF, kTexelsPerBlock> texels{};
  const RgbF& at(int x, int y) const { return texels[4 * y + x]; }
  friend bool operator==(const DecodedBlock&, const DecodedBlock&) = default;
};

/// 565 -> 888 by bit replication.
Rgb8 expand_565(std::uint8_t r5, std::uint8_t g6, std::uint8_t b5);
inline Rgb8 expand_565(Rgb565 c) { return expand_565(c.r, c.g, c.b); }

/// Texel value for alpha level k between two 8-bit endpoints. Computed as
/// ((3-k)*e0 + k*e1) / 765, which is exact in its integer part and
/// symmetric under (e0,e1,k) -> (e1,e0,3-k).
inline double interpolate_channel(std::uint8_t e0, std::uint8_t e1, AlphaLevel k) {
  const int sum = (3 - k) * static_cast<int>(e0) + k * static_cast<int>(e1);
  return static_cast<double>(sum) / 765.0;
}

RgbF interpolate(Rgb8 e0, Rgb8 e1, AlphaLevel k);

/// Throws std::invalid_argument for a 3-color-mode block (e0 <= e1).
DecodedBlock decode_block(const Block& block);

struct EncodeResult {
  Block block;
  bool degenerate = false;  // equal endpoints were perturbed
};

/// Packs already-quantized endpoints and per-texel alpha levels into a
/// 4-color block. Endpoints are swapped (and levels mirrored) when needed so
/// that e0 > e1; equal endpoints fall back to a constant block.
EncodeResult encode_block(Rgb565 e0, Rgb565 e1, std::span<const AlphaLevel, kTexelsPerBlock> levels);

void serialize(const Block& block, std::span<std::uint8_t, kBlockBytes> out);
Block parse(std::span<const std::uint8_t, kBlockBytes> in);

}  // namespace nbtc::bc1
