#include "nbtc/container.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "bytes.h"
#include "nbtc/error.h"

namespace nbtc {

NbtcFile make_nbtc(const CompressedPyramid& latents, const MlpDecoder& mlp) {
  NbtcFile f;
  f.hidden_dim = mlp.hidden_dim();
  f.hidden_layers = mlp.hidden_layers();
  f.mlp_weights.assign(mlp.params().begin(), mlp.params().end());
  f.latents = latents;
  return f;
}

MlpDecoder mlp_from_nbtc(const NbtcFile& f) {
  MlpDecoder m(f.hidden_dim, f.hidden_layers);
  std::copy(f.mlp_weights.begin(), f.mlp_weights.end(), m.params().begin());
  return m;
}

namespace {

constexpr char kMagic[4] = {'N', 'B', 'T', 'C'};

}  // namespace

std::vector<std::uint8_t> serialize_nbtc(const NbtcFile& f) {
  const CompressedPyramid& p = f.latents;
  if (f.mlp_weights.size() != mlp_param_count(f.hidden_dim, f.hidden_layers)) {
    throw std::invalid_argument("serialize_nbtc: weight count does not match decoder shape");
  }
  detail::ByteWriter w;
  w.text(std::string_view(kMagic, 4));
  w.u16(f.version);
  w.u32(static_cast<std::uint32_t>(p.width));
  w.u32(static_cast<std::uint32_t>(p.height));
  w.u8(static_cast<std::uint8_t>(p.variant));
  w.u8(kLatentTextures);
  w.u16(static_cast<std::uint16_t>(f.hidden_dim));
  w.u8(static_cast<std::uint8_t>(f.hidden_layers));
  w.u8(kFeatureChannels);
  for (ChannelRole r : f.roles) w.u8(static_cast<std::uint8_t>(r));
  for (float v : f.mlp_weights) w.f32(v);
  for (const auto& chain : p.textures) {
    w.u8(static_cast<std::uint8_t>(chain.size()));
    for (const auto& level : chain) {
      for (const bc1::Block& b : level) {
        std::array<std::uint8_t, bc1::kBlockBytes> raw{};
        bc1::serialize(b, raw);
        w.bytes(raw);
      }
    }
  }
  return std::move(w.data());
}

NbtcFile parse_nbtc(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  const auto magic = r.bytes(4, "header");
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw ParseError(0, "bad magic, expected \"NBTC\"");
  NbtcFile f;
  std::size_t at = r.offset();
  f.version = r.u16("header");
  if (f.version != kNbtcVersion) {
    throw ParseError(at, "unsupported version " + std::to_string(f.version));
  }
  CompressedPyramid& p = f.latents;
  at = r.offset();
  const std::uint32_t width = r.u32("header");
  const std::uint32_t height = r.u32("header");
  if (width == 0 || height == 0 || width % 32 || height % 32 || width > (1u << 16) || height > (1u << 16)) {
    throw ParseError(at, "base dimensions must be non-zero multiples of 32 (got " + std::to_string(width) + "x" +
                             std::to_string(height) + ")");
  }
  p.width = static_cast<int>(width);
  p.height = static_cast<int>(height);
  at = r.offset();
  const std::uint8_t variant = r.u8("header");
  if (variant > 1) throw ParseError(at, "unknown variant tag " + std::to_string(variant));
  p.variant = static_cast<Variant>(variant);
  at = r.offset();
  if (r.u8("header") != kLatentTextures) throw ParseError(at, "latent texture count must be 4");
  at = r.offset();
  f.hidden_dim = r.u16("header");
  if (f.hidden_dim == 0) throw ParseError(at, "hidden dimension must be positive");
  at = r.offset();
  f.hidden_layers = r.u8("header");
  if (f.hidden_layers == 0) throw ParseError(at, "need at least one hidden layer");
  at = r.offset();
  if (r.u8("header") != kFeatureChannels) throw ParseError(at, "channel count must be 9");
  for (auto& role : f.roles) {
    at = r.offset();
    const std::uint8_t v = r.u8("channel roles");
    if (v >= kFeatureChannels) throw ParseError(at, "unknown channel role " + std::to_string(v));
    role = static_cast<ChannelRole>(v);
  }

  // Every remaining size follows from the header; check the total up front
  // so truncation reports the full expected length.
  const std::size_t weights = mlp_param_count(f.hidden_dim, f.hidden_layers);
  const VariantConfig cfg = VariantConfig::of(p.variant);
  std::size_t expected = r.offset() + 4 * weights;
  std::array<int, kLatentTextures> mips{};
  for (int k = 0; k < kLatentTextures; ++k) {
    const int w = cfg.width(k, p.width);
    const int h = cfg.height(k, p.height);
    mips[k] = latent_mip_count(w, h);
    expected += 1;
    for (int l = 0; l < mips[k]; ++l) {
      expected += static_cast<std::size_t>(((w >> l) + 3) / 4) * (((h >> l) + 3) / 4) * bc1::kBlockBytes;
    }
  }
  if (bytes.size() != expected) {
    throw ParseError(std::min(bytes.size(), expected), "payload length mismatch: expected " +
                                                           std::to_string(expected) + " bytes, got " +
                                                           std::to_string(bytes.size()));
  }

  f.mlp_weights.resize(weights);
  for (float& v : f.mlp_weights) {
    at = r.offset();
    v = r.f32("weights");
    if (!std::isfinite(v)) throw ParseError(at, "non-finite MLP weight");
  }
  for (int k = 0; k < kLatentTextures; ++k) {
    at = r.offset();
    const int count = r.u8("mip count");
    if (count != mips[k]) {
      throw ParseError(at, "texture " + std::to_string(k) + " has " + std::to_string(count) + " mips, expected " +
                               std::to_string(mips[k]));
    }
    const int w = cfg.width(k, p.width);
    const int h = cfg.height(k, p.height);
    for (int l = 0; l < count; ++l) {
      const std::size_t blocks = static_cast<std::size_t>(((w >> l) + 3) / 4) * (((h >> l) + 3) / 4);
      std::vector<bc1::Block> level(blocks);
      for (auto& b : level) {
        at = r.offset();
        b = bc1::parse(r.bytes(bc1::kBlockBytes, "blocks").first<bc1::kBlockBytes>());
        if (!b.four_color()) throw ParseError(at, "BC1 block in 3-color mode");
      }
      p.textures[k].push_back(std::move(level));
    }
  }
  return f;
}

void save_nbtc(const std::string& path, const NbtcFile& f) {
  const auto bytes = serialize_nbtc(f);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

NbtcFile load_nbtc(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_nbtc(bytes);
}

namespace {

void check_same_size(const Image8& a, const Image8& b, const char* name) {
  if (a.width != b.width || a.height != b.height) {
    throw InputError(std::string(name) + " map is " + std::to_string(b.width) + "x" + std::to_string(b.height) +
                     ", albedo is " + std::to_string(a.width) + "x" + std::to_string(a.height));
  }
}

double channel_value(const Image8& img, std::size_t texel, int c) {
  const int src = img.channels >= 3 ? c : 0;
  return img.data[texel * img.channels + src] / 255.0;
}

}  // namespace

TextureSet assemble_texture_set(const Image8& albedo, const Image8& normal, const Image8& roughness,
                                const Image8& metalness, const Image8& ao) {
  check_same_size(albedo, normal, "normal");
  check_same_size(albedo, roughness, "roughness");
  check_same_size(albedo, metalness, "metalness");
  check_same_size(albedo, ao, "ao");
  if (albedo.width <= 0 || albedo.height <= 0 || albedo.width % 32 || albedo.height % 32) {
    throw InputError("texture dimensions must be multiples of 32, got " + std::to_string(albedo.width) + "x" +
                     std::to_string(albedo.height));
  }
  Image base(albedo.width, albedo.height, kFeatureChannels);
  const std::size_t texels = static_cast<std::size_t>(albedo.width) * albedo.height;
  for (std::size_t i = 0; i < texels; ++i) {
    double* px = base.data.data() + i * kFeatureChannels;
    for (int c = 0; c < 3; ++c) {
      px[c] = channel_value(albedo, i, c);
      px[3 + c] = channel_value(normal, i, c);
    }
    px[6] = roughness.data[i * roughness.channels] / 255.0;
    px[7] = metalness.data[i * metalness.channels] / 255.0;
    px[8] = ao.data[i * ao.channels] / 255.0;
  }
  return TextureSet(std::move(base));
}

TextureSet import_texture_set(const TextureSetPaths& paths) {
  return assemble_texture_set(read_png(paths.albedo), read_png(paths.normal), read_png(paths.roughness),
                              read_png(paths.metalness), read_png(paths.ao));
}

std::array<Image8, 5> split_feature_image(const Image& features) {
  constexpr int kChannels[5] = {3, 3, 1, 1, 1};
  constexpr int kFirst[5] = {0, 3, 6, 7, 8};
  std::array<Image8, 5> out;
  const std::size_t texels = static_cast<std::size_t>(features.width) * features.height;
  for (int m = 0; m < 5; ++m) {
    Image8& img = out[m];
    img.width = features.width;
    img.height = features.height;
    img.channels = kChannels[m];
    img.data.resize(texels * img.channels);
    for (std::size_t i = 0; i < texels; ++i) {
      for (int c = 0; c < img.channels; ++c) {
        const double v = std::clamp(features.data[i * features.channels + kFirst[m] + c], 0.0, 1.0);
        img.data[i * img.channels + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return out;
}

void export_feature_images(const std::string& dir, const Image& features) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  static const char* kNames[5] = {"albedo.png", "normal.png", "roughness.png", "metalness.png", "ao.png"};
  const auto maps = split_feature_image(features);
  for (int m = 0; m < 5; ++m) write_png((std::filesystem::path(dir) / kNames[m]).string(), maps[m]);
}

}  // namespace nbtc
