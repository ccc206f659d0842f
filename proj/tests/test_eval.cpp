#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nbtc/eval.h"
#include "nbtc/trainer.h"

using namespace nbtc;

TEST(Psnr, CapZeroAndForty) {
  Image a(4, 4, 3, 0.3);
  EXPECT_EQ(psnr(a, a), kPsnrCap);
  EXPECT_EQ(psnr(Image(4, 4, 3, 0.0), Image(4, 4, 3, 1.0)), 0.0);
  EXPECT_NEAR(psnr_from_mse(1e-4), 40.0, 1e-12);
  Image b(10, 10, 1, 0.5), c(10, 10, 1, 0.5);
  c.data[0] = 0.6;  // MSE = 0.01 / 100
  EXPECT_NEAR(psnr(b, c), 40.0, 1e-9);
  EXPECT_THROW(psnr(Image(2, 2, 1), Image(2, 2, 3)), std::invalid_argument);
}

TEST(Psnr, AggregateIsMeanOfChannelMse) {
  Rng rng(1);
  Image a(8, 8, 9), b(8, 8, 9);
  for (double& v : a.data) v = rng.uniform();
  for (double& v : b.data) v = rng.uniform();
  double sum = 0.0;
  for (int c = 0; c < 9; ++c) sum += channel_mse(a, b, c);
  EXPECT_NEAR(mse(a, b), sum / 9.0, 1e-15);
  // Concatenated channel planes: one big single-channel image.
  Image pa(64, 9, 1), pb(64, 9, 1);
  for (int c = 0; c < 9; ++c)
    for (int i = 0; i < 64; ++i) {
      pa.at(i, c, 0) = a.data[i * 9 + c];
      pb.at(i, c, 0) = b.data[i * 9 + c];
    }
  EXPECT_NEAR(psnr(a, b), psnr(pa, pb), 1e-12);
}

TEST(Rational, Arithmetic) {
  EXPECT_EQ(Rational(6, 8), Rational(3, 4));
  EXPECT_EQ(Rational(1, 3) + Rational(1, 6), Rational(1, 2));
  EXPECT_EQ(Rational(2, 3) * Rational(9, 4), Rational(3, 2));
  EXPECT_EQ(Rational(72) / Rational(10), Rational(36, 5));
  EXPECT_LT(Rational(1, 3), Rational(1, 2));
  EXPECT_THROW(Rational(1, 0), std::invalid_argument);
}

TEST(Footprint, VariantABase) {
  const Footprint f = footprint(Variant::A, 1024, 1024, 32, false, false);
  EXPECT_EQ(f.total_bits_per_texel, Rational(10));
  EXPECT_EQ(f.compression_ratio, Rational(36, 5));
  EXPECT_EQ(f.compression_ratio.to_double(), 7.2);
}

TEST(Footprint, VariantBBase) {
  const Footprint f = footprint(Variant::B, 1024, 512, 32, false, false);
  EXPECT_EQ(f.total_bits_per_texel, Rational(85, 16));
  EXPECT_EQ(f.total_bits_per_texel.to_double(), 5.3125);
  EXPECT_EQ(f.compression_ratio, Rational(72 * 16, 85));
  EXPECT_NEAR(f.compression_ratio.to_double(), 13.55, 0.005);
}

TEST(Footprint, MipsScaleBothSides) {
  const Footprint f = footprint(Variant::A, 256, 256, 32, true, false);
  EXPECT_EQ(f.total_bits_per_texel, Rational(40, 3));
  EXPECT_EQ(f.reference_bits_per_texel, Rational(96));
  EXPECT_EQ(f.compression_ratio, Rational(36, 5));
}

TEST(Footprint, MlpTermAtLargeResolution) {
  const Footprint f = footprint(Variant::A, 4096, 4096, 64, false, true);
  const std::int64_t params = 12 * 64 + 64 + 64 * 9 + 9;
  EXPECT_EQ(f.mlp_bits_per_texel, Rational(params * 32, 4096LL * 4096));
  EXPECT_LT(f.mlp_bits_per_texel, Rational(1, 100));
  EXPECT_EQ(f.total_bits_per_texel, Rational(10) + f.mlp_bits_per_texel);
}

TEST(Footprint, VariantAAlwaysLargerThanB) {
  for (int w = 32; w <= 4096; w *= 2)
    for (int h = 32; h <= 4096; h *= 4)
      for (int d : {16, 32, 64})
        for (bool mips : {false, true}) {
          const Footprint a = footprint(Variant::A, w, h, d, mips);
          const Footprint b = footprint(Variant::B, w, h, d, mips);
          ASSERT_GT(a.total_bits_per_texel, b.total_bits_per_texel);
          ASSERT_LT(a.compression_ratio, b.compression_ratio);
        }
  EXPECT_THROW(footprint(Variant::A, 100, 64, 16, false), std::invalid_argument);
}

namespace {

struct Trained {
  TextureSet ts;
  TrainResult r;
};

const Trained& small_asset() {
  static const Trained t = [] {
    Trained out{make_synthetic_texture_set(64, 64, 3), {}};
    TrainConfig cfg;
    cfg.steps = 30;
    cfg.batch_size = 512;
    out.r = train(out.ts, cfg);
    return out;
  }();
  return t;
}

}  // namespace

TEST(EvaluateAsset, SingleTapAnisoEqualsIsotropic) {
  const Trained& t = small_asset();
  for (double lod : {0.0, 1.0, 2.5}) {
    const EvalReport iso = evaluate_asset(t.r.pyramid, t.r.mlp, t.ts, lod);
    const EvalReport an = evaluate_asset(t.r.pyramid, t.r.mlp, t.ts, lod, AnisoSpec{0.05, 0.02, 1});
    EXPECT_EQ(iso.channel_psnr, an.channel_psnr);
    EXPECT_EQ(iso.aggregate_psnr, an.aggregate_psnr);
    EXPECT_TRUE(an.anisotropic);
  }
}

TEST(EvaluateAsset, GridFollowsLod) {
  const Trained& t = small_asset();
  EXPECT_EQ(decode_image(t.r.pyramid, t.r.mlp, 64, 64, 2.3).width, 16);
  EXPECT_EQ(reference_image(t.ts, 1.0).height, 32);
  const Image img = decode_image(t.r.pyramid, t.r.mlp, 64, 64, 0.0);
  for (double v : img.data) {
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

TEST(EvaluateAsset, SerialAndParallelAgree) {
  const Trained& t = small_asset();
  const AnisoSpec spec{0.03, 0.0, 4};
  EXPECT_EQ(decode_image(t.r.pyramid, t.r.mlp, 64, 64, 0.7, spec, Exec::Serial),
            decode_image(t.r.pyramid, t.r.mlp, 64, 64, 0.7, spec, Exec::Parallel));
  EXPECT_EQ(evaluate_asset(t.r.pyramid, t.r.mlp, t.ts, 1.0, std::nullopt, Exec::Serial),
            evaluate_asset(t.r.pyramid, t.r.mlp, t.ts, 1.0, std::nullopt, Exec::Parallel));
}

TEST(EvaluateAsset, AggregateMatchesChannelMean) {
  const Trained& t = small_asset();
  const EvalReport r = evaluate_asset(t.r.pyramid, t.r.mlp, t.ts, 0.0);
  double sum = 0.0;
  for (double m : r.channel_mse) sum += m;
  EXPECT_NEAR(r.aggregate_mse, sum / 9.0, 1e-15);
  EXPECT_EQ(r.aggregate_psnr, psnr_from_mse(r.aggregate_mse));
}

TEST(EvaluateAsset, StepZeroMatchesInitialization) {
  const TextureSet ts = make_synthetic_texture_set(32, 32, 4);
  TrainConfig cfg;
  cfg.steps = 0;
  const TrainResult r = train(ts, cfg);
  const Trainer init(ts, cfg);
  const Image want = decode_image(init.latents().decode(), init.mlp(), 32, 32, 0.0);
  EXPECT_EQ(evaluate_asset(r.pyramid, r.mlp, ts, 0.0).aggregate_psnr, psnr(want, reference_image(ts, 0.0)));
}

TEST(Reports, TextAndCsv) {
  EvalReport r;
  r.lod = 1.0;
  r.aggregate_psnr = 31.5;
  std::ostringstream text;
  write_report(text, r);
  EXPECT_NE(text.str().find("psnr: 31.5\n"), std::string::npos);
  EXPECT_NE(text.str().find("psnr_albedo_r: "), std::string::npos);
  std::ostringstream csv;
  write_report_csv(csv, {r, r});
  const std::string table = csv.str();
  EXPECT_EQ(table.rfind("lod,filter,taps,psnr_albedo_r,", 0), 0u);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
  std::ostringstream fp;
  write_footprint(fp, footprint(Variant::A, 64, 64, 16, false, false));
  EXPECT_NE(fp.str().find("bits_per_texel: 10\n"), std::string::npos);
  EXPECT_NE(fp.str().find("compression_ratio: 7.2\n"), std::string::npos);
}
