// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>
#include <torch/torch.h>

#include "tse/common.h"
#include "tse/tdsb.h"

namespace tse {
namespace {

TdsbConfig SmallConfig() {
  auto cfg = TdsbConfig::Tiny();
  cfg.embed_dim = 24;
  return cfg;
}

TEST(TdsbConfig, GeometryAndValidation) {
  auto cfg = TdsbConfig::Full();
  EXPECT_EQ(cfg.EncoderFrames(16000), 799);
  EXPECT_EQ(cfg.EncoderFrames(40), 1);
  EXPECT_THROW(cfg.EncoderFrames(39), DataError);
  EXPECT_EQ(cfg.ExtractorInputWidth(), 256);
  cfg.fuse_ssl = true;
  cfg.ssl_channels = 256;
  EXPECT_EQ(cfg.ExtractorInputWidth(), 512);
  EXPECT_EQ(cfg.MaskWidth(), 256);
  cfg.mask_fused = true;
  EXPECT_EQ(cfg.MaskWidth(), 512);

  auto bad = TdsbConfig::Tiny();
  bad.enc_stride = 30;
  EXPECT_THROW(bad.Validate(), ConfigError);
  bad = TdsbConfig::Tiny();
  bad.kernel = 4;
  EXPECT_THROW(bad.Validate(), ConfigError);
  bad = TdsbConfig::Tiny();
  bad.fuse_ssl = true;
  EXPECT_THROW(bad.Validate(), ConfigError);
}

TEST(TdsbEncoder, ShapeAndNonNegativity) {
  torch::manual_seed(1);
  TdsbEncoder enc(SmallConfig());
  auto z = enc->forward(torch::randn({2, 16000}));
  EXPECT_EQ(z.data.sizes(), torch::IntArrayRef({2, 799, 64}));
  EXPECT_EQ(z.stride, 20);
  EXPECT_GE(z.data.min().item<float>(), 0.0f);
  EXPECT_THROW(enc->forward(torch::randn({1, 30})), DataError);
}

TEST(Fuse, ConcatenatesChannels) {
  FeatureMap z{torch::ones({1, 10, 4}), 20};
  FeatureMap h{torch::zeros({1, 10, 3}), 20};
  auto f = Fuse(z, h);
  EXPECT_EQ(f.data.sizes(), torch::IntArrayRef({1, 10, 7}));
  EXPECT_TRUE(torch::equal(f.data.slice(2, 0, 4), z.data));
  EXPECT_THROW(Fuse(z, {torch::zeros({1, 9, 3}), 20}), ShapeError);
  EXPECT_THROW(Fuse(z, {torch::zeros({1, 10, 3}), 40}), ShapeError);
}

TEST(TdsbExtractor, MaskRangeAndUnitPassThrough) {
  torch::manual_seed(2);
  auto cfg = SmallConfig();
  TdsbExtractor ext(cfg);
  FeatureMap z{torch::rand({2, 50, 64}) * 3, 20};
  auto e = torch::randn({2, 24});
  auto mask = ext->EstimateMask(z.data, e);
  EXPECT_EQ(mask.sizes(), torch::IntArrayRef({2, 50, 64}));
  EXPECT_GE(mask.min().item<float>(), 0.0f);
  EXPECT_LE(mask.max().item<float>(), 1.0f);
  EXPECT_TRUE(torch::allclose(ext->forward(z, std::nullopt, e).data, mask * z.data));
  ext->ForceUnitMask(true);
  EXPECT_TRUE(torch::equal(ext->forward(z, std::nullopt, e).data, z.data));
}

TEST(TdsbExtractor, ConditioningControlsTheMask) {
  torch::manual_seed(3);
  TdsbExtractor ext(SmallConfig());
  auto z = torch::rand({1, 30, 64});
  auto e1 = torch::randn({1, 24}), e2 = torch::randn({1, 24});
  EXPECT_FALSE(torch::allclose(ext->EstimateMask(z, e1), ext->EstimateMask(z, e2)));
  {
    // spk_proj(e) == 1 makes the conditioning an identity.
    torch::NoGradGuard g;
    ext->spk_proj()->weight.zero_();
    ext->spk_proj()->bias.fill_(1.0);
  }
  EXPECT_TRUE(torch::equal(ext->EstimateMask(z, e1), ext->EstimateMask(z, e2)));
}

TEST(TdsbExtractor, FusedInputAndFusedMask) {
  torch::manual_seed(4);
  auto cfg = SmallConfig();
  cfg.fuse_ssl = true;
  cfg.ssl_channels = 16;
  TdsbExtractor ext(cfg);
  FeatureMap z{torch::rand({1, 20, 64}), 20};
  FeatureMap h{torch::randn({1, 20, 16}), 20};
  auto e = torch::randn({1, 24});
  EXPECT_EQ(ext->forward(z, h, e).data.sizes(), torch::IntArrayRef({1, 20, 64}));
  EXPECT_THROW(ext->forward(z, std::nullopt, e), ShapeError);

  cfg.mask_fused = true;
  TdsbExtractor fused(cfg);
  EXPECT_EQ(fused->forward(z, h, e).data.sizes(), torch::IntArrayRef({1, 20, 80}));
}

TEST(TdsbDecoder, OverlapAddOracle) {
  torch::manual_seed(5);
  auto cfg = SmallConfig();
  TdsbDecoder dec(cfg);
  auto w = dec->named_parameters()["deconv.weight"];  // [C, 1, kernel]
  ASSERT_EQ(w.sizes(), torch::IntArrayRef({64, 1, 40}));
  // One active coefficient: channel 7 at frame 3 scaled by 2.
  auto z = torch::zeros({1, 10, 64});
  z[0][3][7] = 2.0;
  auto y = dec->forward({z, 20}, 220);
  auto expected = torch::zeros({220});
  expected.slice(0, 60, 100) = 2.0 * w[7][0];
  EXPECT_TRUE(torch::allclose(y[0], expected, 1e-6, 1e-7));
}

TEST(TdsbDecoder, LengthContractAndZeros) {
  torch::manual_seed(6);
  auto cfg = SmallConfig();
  TdsbEncoder enc(cfg);
  TdsbDecoder dec(cfg);
  for (std::int64_t len : {40, 41, 59, 60, 16000, 16019}) {
    auto z = enc->forward(torch::randn({2, len}));
    EXPECT_EQ(dec->forward(z, len).sizes(), torch::IntArrayRef({2, len})) << len;
  }
  auto silent = dec->forward({torch::zeros({1, 12, 64}), 20}, 270);
  EXPECT_EQ(silent.abs().max().item<float>(), 0.0f);
}

TEST(FitLength, PadsAndCrops) {
  auto x = torch::arange(5).to(torch::kFloat).unsqueeze(0);
  EXPECT_TRUE(torch::equal(FitLength(x, 3), x.slice(1, 0, 3)));
  auto padded = FitLength(x, 7);
  EXPECT_EQ(padded.size(1), 7);
  EXPECT_EQ(padded[0][6].item<float>(), 0.0f);
  EXPECT_TRUE(torch::equal(FitLength(x, 5), x));
}

}  // namespace
}  // namespace tse
