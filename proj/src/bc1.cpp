#include "nbtc/bc1.h"

#include <stdexcept>
#include <string>

namespace nbtc::bc1 {

Rgb8 expand_565(std::uint8_t r5, std::uint8_t g6, std::uint8_t b5) {
  r5 &= 0x1F;
  g6 &= 0x3F;
  b5 &= 0x1F;
  return {static_cast<std::uint8_t>((r5 << 3) | (r5 >> 2)),
          static_cast<std::uint8_t>((g6 << 2) | (g6 >> 4)),
          static_cast<std::uint8_t>((b5 << 3) | (b5 >> 2))};
}

RgbF interpolate(Rgb8 e0, Rgb8 e1, AlphaLevel k) {
  return {interpolate_channel(e0.r, e1.r, k), interpolate_channel(e0.g, e1.g, k),
          interpolate_channel(e0.b, e1.b, k)};
}

DecodedBlock decode_block(const Block& block) {
  if (!block.four_color()) {
    throw std::invalid_argument("BC1 block is in 3-color mode (e0=" + std::to_string(block.e0) +
                                " <= e1=" + std::to_string(block.e1) + ")");
  }
  const Rgb8 c0 = expand_565(Rgb565::unpack(block.e0));
  const Rgb8 c1 = expand_565(Rgb565::unpack(block.e1));
  DecodedBlock out;
  for (int i = 0; i < kTexelsPerBlock; ++i) {
    const auto idx = static_cast<std::uint8_t>((block.indices >> (2 * i)) & 3u);
    out.texels[i] = interpolate(c0, c1, to_level(idx));
  }
  return out;
}

EncodeResult encode_block(Rgb565 e0, Rgb565 e1, std::span<const AlphaLevel, kTexelsPerBlock> levels) {
  EncodeResult result;
  std::uint16_t p0 = e0.pack();
  std::uint16_t p1 = e1.pack();

  if (p0 == p1) {
    // Both endpoints decode to the same color, so levels are irrelevant.
    result.degenerate = true;
    if (p0 > 0) {
      result.block = {p0, static_cast<std::uint16_t>(p0 - 1), 0u};
    } else {
      // Black: keep the color on e1 and select it everywhere.
      result.block = {1, 0, 0x55555555u};
    }
    return result;
  }

  const bool swap = p0 < p1;
  if (swap) std::swap(p0, p1);
  Block block{p0, p1, 0u};
  for (int i = 0; i < kTexelsPerBlock; ++i) {
    AlphaLevel k = levels[i] & 3;
    if (swap) k = static_cast<AlphaLevel>(3 - k);
    block.indices |= static_cast<std::uint32_t>(to_index(k)) << (2 * i);
  }
  result.block = block;
  return result;
}

void serialize(const Block& block, std::span<std::uint8_t, kBlockBytes> out) {
  out[0] = static_cast<std::uint8_t>(block.e0 & 0xFF);
  out[1] = static_cast<std::uint8_t>(block.e0 >> 8);
  out[2] = static_cast<std::uint8_t>(block.e1 & 0xFF);
  out[3] = static_cast<std::uint8_t>(block.e1 >> 8);
  for (int i = 0; i < 4; ++i) out[4 + i] = static_cast<std::uint8_t>(block.indices >> (8 * i));
}

Block parse(std::span<const std::uint8_t, kBlockBytes> in) {
  Block b;
  b.e0 = static_cast<std::uint16_t>(in[0] | (in[1] << 8));
  b.e1 = static_cast<std::uint16_t>(in[2] | (in[3] << 8));
  b.indices = 0;
  for (int i = 0; i < 4; ++i) b.indices |= static_cast<std::uint32_t>(in[4 + i]) << (8 * i);
  return b;
}

}  // namespace nbtc::bc1
