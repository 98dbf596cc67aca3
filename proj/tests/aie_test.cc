// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>
#include <torch/torch.h>

#include "tse/aie.h"
#include "tse/backbone.h"
#include "tse/common.h"

namespace tse {
namespace {

class AieTest : public ::testing::Test {
 protected:
  void SetUp() override {
    torch::manual_seed(11);
    backbone_ = Backbone(BackboneConfig::Tiny());
    taps_ = backbone_->ForwardFeatures(torch::randn({2, 16000}),
                                       BackboneMode::kFrozen);
  }
  Aie Make(AieFusion fusion, AieSource source, std::int64_t channels = 32) {
    AieConfig cfg;
    cfg.fusion = fusion;
    cfg.source = source;
    cfg.channels = channels;
    return Aie(cfg, backbone_->config());
  }
  Backbone backbone_{nullptr};
  LayerTaps taps_;
};

TEST_F(AieTest, EveryVariantReachesTheEncoderRate) {
  for (auto fusion : {AieFusion::kFpm, AieFusion::kUnet}) {
    for (auto source : {AieSource::kMultiCnn, AieSource::kMultiCnnPlusTransformer,
                        AieSource::kSingleCnn, AieSource::kTransformerOnly}) {
      auto aie = Make(fusion, source);
      EXPECT_EQ(aie->target_level(), 3);
      auto h = aie->forward(taps_);
      EXPECT_EQ(h.data.sizes(), torch::IntArrayRef({2, 799, 32}));
      EXPECT_EQ(h.stride, 20);
      EXPECT_TRUE(torch::isfinite(h.data).all().item<bool>());
    }
  }
}

TEST_F(AieTest, BlockLayout) {
  auto multi = Make(AieFusion::kUnet, AieSource::kMultiCnn);
  ASSERT_EQ(multi->blocks().size(), 4u);
  // The deepest block of a CNN-only pyramid has no deeper input.
  EXPECT_EQ(multi->blocks()[0]->deconv_in_channels(), 64);
  EXPECT_EQ(multi->blocks()[1]->deconv_in_channels(), 64 + 32);
  auto with_trf = Make(AieFusion::kUnet, AieSource::kMultiCnnPlusTransformer);
  EXPECT_EQ(with_trf->blocks()[0]->deconv_in_channels(), 64 + 32);
  auto fpm = Make(AieFusion::kFpm, AieSource::kMultiCnnPlusTransformer);
  EXPECT_EQ(fpm->blocks()[0]->deconv_in_channels(), 32);
  EXPECT_TRUE(Make(AieFusion::kFpm, AieSource::kSingleCnn)->blocks().empty());
  EXPECT_EQ(with_trf->top_weights()->size(), 5);
}

TEST_F(AieTest, UpsampleCropsToTheFinerTap) {
  // 49 frames at stride 320 deconvolve to (49 + 1) * 2 = 100 frames; the
  // surplus frame is dropped from the back.
  UpsampleBlock block(AieFusion::kFpm, 64, 0, 32, 2);
  FeatureMap h = taps_.Cnn(7);
  auto out = block->forward(h, std::nullopt, 99);
  EXPECT_EQ(out.data.sizes(), torch::IntArrayRef({2, 99, 32}));
  EXPECT_EQ(out.stride, 160);
  auto lateral = block->lateral()->forward(h.data.transpose(1, 2));
  auto full = block->deconv()->forward(lateral).transpose(1, 2);
  EXPECT_EQ(full.size(1), 100);
  EXPECT_TRUE(torch::allclose(out.data, full.slice(1, 0, 99)));
  EXPECT_THROW(block->forward(h, std::nullopt, 90), ShapeError);
}

TEST_F(AieTest, SingleCnnIsAProjectionOfLevelThree) {
  auto aie = Make(AieFusion::kFpm, AieSource::kSingleCnn);
  auto params = aie->named_parameters();
  auto w = params["output_fusion.weight"];
  auto b = params["output_fusion.bias"];
  auto expected =
      torch::conv1d(taps_.Cnn(3).data.transpose(1, 2), w, b).transpose(1, 2);
  EXPECT_TRUE(torch::allclose(aie->forward(taps_).data, expected, 1e-5, 1e-6));
}

TEST_F(AieTest, FpmWithoutActivationIsAffineInTheTop) {
  AieConfig cfg;
  cfg.source = AieSource::kTransformerOnly;
  cfg.channels = 16;
  cfg.activation = false;
  Aie aie(cfg, backbone_->config());
  // With no nonlinearity, f(a) + f(b) - f(0) == f(a + b).
  auto run = [&](const torch::Tensor &scale) {
    LayerTaps t = taps_;
    for (auto &x : t.trf) x.data = x.data * scale;
    return aie->forward(t).data;
  };
  auto one = run(torch::tensor(1.0f)), two = run(torch::tensor(2.0f)),
       zero = run(torch::tensor(0.0f));
  EXPECT_TRUE(torch::allclose(one + one - zero, two, 1e-4, 1e-4));
}

TEST_F(AieTest, ConfigErrors) {
  AieConfig cfg;
  cfg.target_stride = 30;
  try {
    Aie aie(cfg, backbone_->config());
    FAIL() << "expected ConfigError";
  } catch (const ConfigError &e) {
    EXPECT_NE(std::string(e.what()).find("5, 10, 20, 40, 80, 160, 320"),
              std::string::npos);
  }
  auto cnn_only = Make(AieFusion::kFpm, AieSource::kMultiCnn);
  EXPECT_THROW(cnn_only->InitTop(taps_.trf), ConfigError);
  auto with_trf = Make(AieFusion::kFpm, AieSource::kMultiCnnPlusTransformer);
  std::vector<FeatureMap> short_taps(taps_.trf.begin(), taps_.trf.end() - 1);
  EXPECT_THROW(with_trf->InitTop(short_taps), ShapeError);
  LayerTaps no_trf = taps_;
  no_trf.trf.clear();
  EXPECT_THROW(with_trf->forward(no_trf), ShapeError);
}

TEST_F(AieTest, GradientsReachEveryParameter) {
  auto aie = Make(AieFusion::kUnet, AieSource::kMultiCnnPlusTransformer);
  aie->forward(taps_).data.pow(2).mean().backward();
  for (const auto &p : aie->named_parameters()) {
    ASSERT_TRUE(p.value().grad().defined()) << p.key();
    EXPECT_GT(p.value().grad().abs().sum().item<double>(), 0.0) << p.key();
  }
}

}  // namespace
}  // namespace tse
