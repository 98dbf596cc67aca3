// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <set>

#include <gtest/gtest.h>
#include <torch/torch.h>

#include "test_util.h"
#include "tse/common.h"
#include "tse/config.h"
#include "tse/model.h"

namespace tse {
namespace {

RunConfig Tiny(std::vector<std::pair<std::string, std::string>> sets = {}) {
  auto cfg = RunConfig::ForPreset(Preset::kTiny);
  for (const auto &[k, v] : sets) cfg.Set(k, v);
  cfg.Validate();
  return cfg;
}

std::set<std::string> TopLevelModules(const TseModel &m) {
  std::set<std::string> names;
  for (const auto &c : m.named_children()) names.insert(c.key());
  return names;
}

TEST(Model, TdsbVariantsProduceMixtureLengthOutput) {
  torch::NoGradGuard g;
  const std::vector<std::vector<std::pair<std::string, std::string>>> variants = {
      {{"spk_encoder.type", "tcn"}},
      {},
      {{"tdsb.fuse_ssl", "true"}, {"aie.fusion", "unet"}},
      {{"tdsb.fuse_ssl", "true"}, {"aie.source", "single_cnn"}},
      {{"tdsb.fuse_ssl", "true"}, {"tdsb.mask_fused", "true"}},
  };
  for (const auto &v : variants) {
    auto model = BuildModel(Tiny(v));
    auto y = model->Forward(torch::randn({2, 9000}) * 0.1,
                            torch::randn({2, 7000}) * 0.1);
    EXPECT_EQ(y.sizes(), torch::IntArrayRef({2, 9000}));
    EXPECT_TRUE(torch::isfinite(y).all().item<bool>());
  }
}

TEST(Model, ModuleRegistrationFollowsTheConfig) {
  auto baseline = BuildModel(Tiny({{"spk_encoder.type", "tcn"}}));
  EXPECT_EQ(TopLevelModules(*baseline),
            (std::set<std::string>{"encoder", "extractor", "decoder", "tcn_spk"}));
  EXPECT_FALSE(baseline->backbone());
  EXPECT_TRUE(baseline->BackboneParameters().empty());
  EXPECT_TRUE(baseline->NamedLayerWeights().empty());

  auto full = BuildModel(Tiny({{"tdsb.fuse_ssl", "true"}}));
  EXPECT_EQ(TopLevelModules(*full),
            (std::set<std::string>{"encoder", "extractor", "decoder", "ssl", "aie",
                                   "mhfa"}));
  std::vector<std::string> labels;
  for (const auto &[label, w] : full->NamedLayerWeights()) labels.push_back(label);
  EXPECT_EQ(labels, (std::vector<std::string>{"aie_top", "mhfa_keys", "mhfa_values"}));

  auto superb = BuildModel(Tiny({{"model.type", "superb"}}));
  EXPECT_EQ(TopLevelModules(*superb), (std::set<std::string>{"ssl", "head"}));
  labels.clear();
  for (const auto &[label, w] : superb->NamedLayerWeights()) labels.push_back(label);
  EXPECT_EQ(labels, (std::vector<std::string>{"extractor", "spk"}));
}

TEST(Model, ParameterSplitCoversEverything) {
  auto model = BuildModel(Tiny({{"tdsb.fuse_ssl", "true"}}));
  const auto all = model->parameters().size();
  const auto bb = model->BackboneParameters().size();
  EXPECT_GT(bb, 0u);
  EXPECT_EQ(bb + model->HeadParameters().size(), all);
  EXPECT_EQ(bb, model->backbone()->parameters().size());
}

TEST(Model, FreezeToggle) {
  auto model = BuildModel(Tiny());
  EXPECT_TRUE(model->backbone_frozen());
  for (const auto &p : model->BackboneParameters()) EXPECT_FALSE(p.requires_grad());
  model->SetBackboneFrozen(false);
  for (const auto &p : model->BackboneParameters()) EXPECT_TRUE(p.requires_grad());
  for (const auto &p : model->HeadParameters()) EXPECT_TRUE(p.requires_grad());
}

TEST(Model, BuildIsSeeded) {
  auto a = BuildModel(Tiny({{"train.seed", "3"}}));
  auto b = BuildModel(Tiny({{"train.seed", "3"}}));
  auto c = BuildModel(Tiny({{"train.seed", "4"}}));
  auto pa = a->parameters(), pb = b->parameters(), pc = c->parameters();
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_TRUE(torch::equal(pa[i], pb[i]));
    any_diff |= !torch::equal(pa[i], pc[i]);
  }
  EXPECT_TRUE(any_diff);
}

TEST(Model, CheckpointRoundTrip) {
  testing::TempDir dir;
  auto cfg = Tiny({{"tdsb.fuse_ssl", "true"}, {"train.seed", "5"}});
  auto model = BuildModel(cfg);
  {
    torch::NoGradGuard g;
    for (auto &p : model->parameters()) p.add_(0.01);
  }
  auto archive = ExportModel(*model, cfg);
  EXPECT_EQ(archive.metadata.at("kind"), "tse_model");
  EXPECT_EQ(archive.metadata.at("config_hash"), cfg.Hash());
  archive.Save(dir.Sub("m.ckpt"));

  auto loaded = LoadModelCheckpoint(dir.Sub("m.ckpt"));
  EXPECT_EQ(loaded.config.Hash(), cfg.Hash());
  torch::NoGradGuard g;
  auto mix = torch::randn({1, 6000}) * 0.1, enr = torch::randn({1, 5000}) * 0.1;
  EXPECT_TRUE(torch::equal(model->Forward(mix, enr), loaded.model->Forward(mix, enr)));

  auto other = BuildModel(Tiny({{"model.type", "superb"}}));
  EXPECT_THROW(LoadModel(*other, archive), DataError);
}

TEST(Model, PretrainedBackboneIsImported) {
  testing::TempDir dir;
  torch::manual_seed(77);
  Backbone donor(BackboneConfig::Tiny());
  donor->ExportCheckpoint().Save(dir.Sub("bb.ckpt"));
  auto model = BuildModel(Tiny({{"backbone.checkpoint", dir.Sub("bb.ckpt")}}));
  auto mine = model->backbone()->named_parameters();
  for (const auto &p : donor->named_parameters())
    EXPECT_TRUE(torch::equal(p.value(), mine[p.key()])) << p.key();
}

TEST(Model, SpeakerEmbeddingUsesOnlyTheEnrollment) {
  torch::NoGradGuard g;
  auto model = BuildModel(Tiny());
  auto &tdsb = dynamic_cast<TdsbTse &>(*model);
  auto enr = torch::randn({1, 8000}) * 0.1;
  auto e = tdsb.SpeakerEmbedding(enr);
  EXPECT_EQ(e.sizes(), torch::IntArrayRef({1, 128}));
  EXPECT_TRUE(torch::equal(e, tdsb.SpeakerEmbedding(enr)));
  EXPECT_THROW(tdsb.SslStream(torch::randn({1, 8000})), ShapeError);
}

}  // namespace
}  // namespace tse
