// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>
#include <torch/torch.h>

#include "tse/common.h"
#include "tse/spk_encoder.h"

namespace tse {
namespace {

std::vector<FeatureMap> RandomTaps(int n, std::int64_t batch, std::int64_t t,
                                   std::int64_t dim) {
  std::vector<FeatureMap> taps;
  for (int i = 0; i < n; ++i) taps.push_back({torch::randn({batch, t, dim}), 320});
  return taps;
}

std::vector<FeatureMap> Reindex(const std::vector<FeatureMap> &taps,
                                const torch::Tensor &index) {
  std::vector<FeatureMap> out;
  for (const auto &x : taps) out.push_back({x.data.index_select(1, index), x.stride});
  return out;
}

MhfaConfig SmallMhfa() { return {4, 16, 24, 32}; }

TEST(Mhfa, ShapesAndAttentionNormalization) {
  torch::manual_seed(1);
  Mhfa mhfa(SmallMhfa(), 5, 48);
  auto out = mhfa->Pool(RandomTaps(5, 3, 17, 48));
  EXPECT_EQ(out.embedding.sizes(), torch::IntArrayRef({3, 32}));
  EXPECT_EQ(out.attention.sizes(), torch::IntArrayRef({3, 4, 17}));
  EXPECT_TRUE(torch::allclose(out.attention.sum(2), torch::ones({3, 4})));
  EXPECT_EQ(mhfa->key_weights()->size(), 5);
  EXPECT_EQ(mhfa->value_weights()->size(), 5);
}

TEST(Mhfa, InvariantToFramePermutation) {
  torch::manual_seed(2);
  Mhfa mhfa(SmallMhfa(), 3, 48);
  auto taps = RandomTaps(3, 2, 25, 48);
  auto perm = torch::randperm(25);
  EXPECT_TRUE(torch::allclose(mhfa->forward(taps),
                              mhfa->forward(Reindex(taps, perm)), 1e-5, 1e-5));
}

TEST(Mhfa, InvariantToFrameDuplication) {
  torch::manual_seed(3);
  Mhfa mhfa(SmallMhfa(), 3, 48);
  auto taps = RandomTaps(3, 1, 10, 48);
  auto twice = torch::cat({torch::arange(10), torch::arange(10)});
  EXPECT_TRUE(torch::allclose(mhfa->forward(taps),
                              mhfa->forward(Reindex(taps, twice)), 1e-5, 1e-5));
}

TEST(Mhfa, BatchItemsAreIndependent) {
  torch::manual_seed(4);
  Mhfa mhfa(SmallMhfa(), 2, 48);
  auto taps = RandomTaps(2, 3, 12, 48);
  auto batched = mhfa->forward(taps);
  for (std::int64_t b = 0; b < 3; ++b) {
    std::vector<FeatureMap> one;
    for (const auto &x : taps) one.push_back({x.data.slice(0, b, b + 1), x.stride});
    EXPECT_TRUE(torch::allclose(batched[b], mhfa->forward(one)[0], 1e-5, 1e-5));
  }
}

TEST(Mhfa, TapCountMismatchIsAShapeError) {
  Mhfa mhfa(SmallMhfa(), 4, 48);
  EXPECT_THROW(mhfa->forward(RandomTaps(3, 1, 5, 48)), ShapeError);
}

TEST(Mhfa, GradientsReachBothWeightSets) {
  torch::manual_seed(5);
  Mhfa mhfa(SmallMhfa(), 3, 48);
  mhfa->forward(RandomTaps(3, 2, 9, 48)).pow(2).sum().backward();
  for (auto w : {mhfa->key_weights(), mhfa->value_weights()}) {
    ASSERT_TRUE(w->logits().grad().defined());
    EXPECT_GT(w->logits().grad().abs().sum().item<double>(), 0.0);
  }
}

TEST(TcnSpeakerEncoder, ShapeAndShortInput) {
  torch::manual_seed(6);
  TcnSpeakerConfig cfg;
  cfg.embed_dim = 40;
  TcnSpeakerEncoder enc(cfg);
  EXPECT_EQ(enc->forward(torch::randn({2, 8000})).sizes(),
            torch::IntArrayRef({2, 40}));
  EXPECT_EQ(enc->forward(torch::randn({1, 40})).sizes(),
            torch::IntArrayRef({1, 40}));
  EXPECT_THROW(enc->forward(torch::randn({1, 39})), DataError);
}

TEST(TcnSpeakerEncoder, BatchItemsAreIndependent) {
  torch::manual_seed(7);
  TcnSpeakerEncoder enc(TcnSpeakerConfig{});
  auto x = torch::randn({3, 4000});
  auto batched = enc->forward(x);
  for (std::int64_t b = 0; b < 3; ++b)
    EXPECT_TRUE(torch::allclose(batched[b], enc->forward(x.slice(0, b, b + 1))[0],
                                1e-5, 1e-5));
}

}  // namespace
}  // namespace tse
