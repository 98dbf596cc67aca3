// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cstdlib>

#include <gtest/gtest.h>
#include <torch/torch.h>

#include "tse/archive.h"
#include "tse/backbone.h"
#include "tse/common.h"

namespace tse {
namespace {

Backbone MakeTiny(std::uint64_t seed) {
  torch::manual_seed(seed);
  return Backbone(BackboneConfig::Tiny());
}

TEST(BackboneGeometry, FrameCountsForOneSecond) {
  const auto cfg = BackboneConfig::BaseCompatible();
  const std::int64_t expected[] = {3199, 1599, 799, 399, 199, 99, 49};
  for (int j = 1; j <= 7; ++j) EXPECT_EQ(FrameCount(cfg, 16000, j), expected[j - 1]);
  EXPECT_EQ(cfg.CumulativeStride(3), 20);
  EXPECT_EQ(cfg.CumulativeStride(7), 320);
}

TEST(BackboneGeometry, ReceptiveFields) {
  const auto cfg = BackboneConfig::Tiny();
  const std::int64_t expected[] = {10, 20, 40, 80, 160, 240, 400};
  for (int j = 1; j <= 7; ++j) EXPECT_EQ(ReceptiveField(cfg, j), expected[j - 1]);
  EXPECT_EQ(FrameCount(cfg, 400, 7), 1);
  EXPECT_THROW(FrameCount(cfg, 399, 7), DataError);
  EXPECT_EQ(FrameCount(cfg, 40, 3), 1);
}

TEST(BackboneGeometry, ValidateRejectsBadConfigs) {
  auto cfg = BackboneConfig::Tiny();
  cfg.n_transformer_blocks = 0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = BackboneConfig::Tiny();
  cfg.n_heads = 3;  // 128 is not divisible by 3
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

TEST(Backbone, TapShapesAndStrides) {
  auto bb = MakeTiny(1);
  auto taps = bb->ForwardFeatures(torch::randn({2, 16000}), BackboneMode::kFrozen);
  ASSERT_EQ(taps.cnn.size(), 7u);
  ASSERT_EQ(taps.trf.size(), 5u);
  const std::int64_t frames[] = {3199, 1599, 799, 399, 199, 99, 49};
  for (int j = 1; j <= 7; ++j) {
    EXPECT_EQ(taps.Cnn(j).data.sizes(), torch::IntArrayRef({2, frames[j - 1], 64}));
    EXPECT_EQ(taps.Cnn(j).stride, bb->config().CumulativeStride(j));
  }
  for (const auto &t : taps.trf) {
    EXPECT_EQ(t.data.sizes(), torch::IntArrayRef({2, 49, 128}));
    EXPECT_EQ(t.stride, 320);
  }
  auto cnn_only = bb->ForwardFeatures(torch::randn({1, 8000}),
                                      BackboneMode::kFrozen, false);
  EXPECT_TRUE(cnn_only.trf.empty());
  EXPECT_EQ(cnn_only.cnn.size(), 7u);
}

TEST(Backbone, FrozenModeIsDetached) {
  auto bb = MakeTiny(2);
  bb->SetTrainable(false);
  for (const auto &p : bb->parameters()) EXPECT_FALSE(p.requires_grad());
  auto taps = bb->ForwardFeatures(torch::randn({1, 4000}), BackboneMode::kFrozen);
  EXPECT_FALSE(taps.trf.back().data.requires_grad());

  bb->SetTrainable(true);
  auto live = bb->ForwardFeatures(torch::randn({1, 4000}), BackboneMode::kTrainable);
  EXPECT_TRUE(live.trf.back().data.requires_grad());
}

TEST(Backbone, DeterministicForward) {
  auto bb = MakeTiny(3);
  auto x = torch::randn({1, 6000});
  auto a = bb->ForwardFeatures(x, BackboneMode::kFrozen);
  auto b = bb->ForwardFeatures(x, BackboneMode::kFrozen);
  EXPECT_TRUE(torch::equal(a.trf.back().data, b.trf.back().data));
}

TEST(Backbone, FirstBlockInputIsTrfZero) {
  auto bb = MakeTiny(4);
  std::vector<torch::Tensor> inputs;
  bb->SetBlockInputHook(
      [&](int, const torch::Tensor &x) { inputs.push_back(x.clone()); });
  auto taps = bb->ForwardFeatures(torch::randn({1, 5000}), BackboneMode::kFrozen);
  ASSERT_EQ(inputs.size(), 4u);
  EXPECT_TRUE(torch::equal(inputs[0], taps.trf[0].data));
  for (std::size_t i = 1; i < inputs.size(); ++i)
    EXPECT_TRUE(torch::equal(inputs[i], taps.trf[i].data));
}

TEST(Backbone, CheckpointRoundTrip) {
  auto a = MakeTiny(5);
  auto b = MakeTiny(6);
  auto x = torch::randn({1, 4000});
  auto ya = a->ForwardFeatures(x, BackboneMode::kFrozen).trf.back().data;
  EXPECT_FALSE(torch::equal(
      ya, b->ForwardFeatures(x, BackboneMode::kFrozen).trf.back().data));
  auto report = b->ImportCheckpoint(a->ExportCheckpoint());
  EXPECT_TRUE(report.unmatched.empty());
  EXPECT_TRUE(torch::equal(
      ya, b->ForwardFeatures(x, BackboneMode::kFrozen).trf.back().data));
}

TEST(Backbone, ImportThroughNameMapAndPrefix) {
  auto a = MakeTiny(7);
  auto archive = a->ExportCheckpoint();
  const std::string victim = "encoder.layers.0.attention.q_proj.weight";
  ASSERT_TRUE(archive.tensors.count(victim));

  TensorArchive renamed;
  for (auto &[name, t] : archive.tensors)
    renamed.tensors[name == victim ? "legacy.q" : "wavlm." + name] = t;
  renamed.tensors["wavlm.quantizer.codebook"] = {{2}, {0.f, 1.f}};

  auto b = MakeTiny(8);
  // Unmapped: the victim stays unassigned and is named in the error.
  try {
    b->ImportCheckpoint(renamed, {}, "wavlm.");
    FAIL() << "expected DataError";
  } catch (const DataError &e) {
    EXPECT_NE(std::string(e.what()).find(victim), std::string::npos);
  }

  TensorArchive mapped = renamed;
  mapped.tensors["wavlm.legacy.q"] = mapped.tensors["legacy.q"];
  mapped.tensors.erase("legacy.q");
  auto report = b->ImportCheckpoint(mapped, {{"legacy.q", victim}}, "wavlm.");
  EXPECT_EQ(report.unmatched, std::vector<std::string>{"wavlm.quantizer.codebook"});
  auto x = torch::randn({1, 3000});
  EXPECT_TRUE(torch::equal(
      a->ForwardFeatures(x, BackboneMode::kFrozen).trf.back().data,
      b->ForwardFeatures(x, BackboneMode::kFrozen).trf.back().data));
}

TEST(Backbone, ImportRejectsShapeMismatchAndDoubleAssignment) {
  auto a = MakeTiny(9);
  auto archive = a->ExportCheckpoint();
  auto bad = archive;
  bad.tensors["feature_projection.projection.bias"] = {{3}, {0.f, 0.f, 0.f}};
  EXPECT_THROW(a->ImportCheckpoint(bad), DataError);

  auto twice = archive;
  twice.tensors["alias"] = archive.tensors["feature_projection.projection.bias"];
  EXPECT_THROW(
      a->ImportCheckpoint(twice, {{"alias", "feature_projection.projection.bias"}}),
      DataError);
}

TEST(Backbone, ConvPositionSchemeRuns) {
  auto cfg = BackboneConfig::Tiny();
  cfg.positions = PositionScheme::kConv;
  cfg.pos_conv_kernel = 16;
  cfg.pos_conv_groups = 4;
  torch::manual_seed(0);
  Backbone bb(cfg);
  auto taps = bb->ForwardFeatures(torch::randn({1, 8000}), BackboneMode::kFrozen);
  EXPECT_EQ(taps.trf.back().data.sizes(), torch::IntArrayRef({1, 24, 128}));
  auto names = bb->ExportCheckpoint().tensors;
  EXPECT_TRUE(names.count("encoder.pos_conv_embed.conv.weight_g"));
  EXPECT_TRUE(names.count("encoder.pos_conv_embed.conv.weight_v"));
}

// Runs only when a converted pretrained checkpoint is available.
TEST(Backbone, PretrainedCheckpointImports) {
  const char *path = std::getenv("TSE_WAVLM_CHECKPOINT");
  if (!path) GTEST_SKIP() << "TSE_WAVLM_CHECKPOINT not set";
  Backbone bb(BackboneConfig::BaseCompatible());
  std::map<std::string, std::string> name_map;
  if (const char *m = std::getenv("TSE_WAVLM_NAME_MAP")) name_map = ReadNameMap(m);
  auto report = bb->ImportCheckpoint(TensorArchive::Load(path), name_map);
  EXPECT_FALSE(report.assigned.empty());
  auto taps = bb->ForwardFeatures(torch::randn({1, 16000}), BackboneMode::kFrozen);
  EXPECT_EQ(taps.trf.size(), 13u);
  EXPECT_EQ(taps.trf.back().frames(), 49);
}

}  // namespace
}  // namespace tse
