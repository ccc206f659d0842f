#pragma once

// Stand-alone BC1 decoder written directly from the Khronos block
// description. Shares no code with nbtc::bc1.

#include <array>
#include <cstdint>

namespace ref_bc1 {

/// Decoded texels in row-major order, RGB in [0,1]. `ok` is false for
/// 3-color (punch-through) blocks, which this toolkit never emits.
struct Texels {
  bool ok = false;
  std::array<std::array<double, 3>, 16> rgb{};
};

Texels decode(const std::array<std::uint8_t, 8>& bytes);

}  // namespace ref_bc1
