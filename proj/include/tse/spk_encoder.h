// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef TSE_SPK_ENCODER_H_
#define TSE_SPK_ENCODER_H_

#include <vector>

#include <torch/torch.h>

#include "tse/aggregation.h"
#include "tse/feature_map.h"
#include "tse/tcn.h"

namespace tse {

inline constexpr std::int64_t kSpeakerEmbeddingDim = 256;

struct MhfaConfig {
  int n_heads = 8;
  std::int64_t key_dim = 128;
  std::int64_t value_dim = 128;
  std::int64_t embed_dim = kSpeakerEmbeddingDim;
};

struct MhfaOutput {
  torch::Tensor embedding;  // [B, embed_dim]
  torch::Tensor attention;  // [B, heads, T], sums to 1 over T
};

// Multi-head factorized attentive pooling over Transformer taps.
//
//   K = sum_i wk_i H^trf_i        V = sum_i wv_i H^trf_i
//   a_h = softmax_t(score_h(K Wk))
//   e = Linear(concat_h sum_t a_h(t) (V Wv)(t))
class MhfaImpl : public torch::nn::Module {
 public:
  // n_layers: number of Transformer taps (N + 1); input_dim: model width.
  MhfaImpl(MhfaConfig cfg, std::int64_t n_layers, std::int64_t input_dim);

  const MhfaConfig &config() const { return cfg_; }
  LayerWeights key_weights() const { return key_weights_; }
  LayerWeights value_weights() const { return value_weights_; }

  MhfaOutput Pool(const std::vector<FeatureMap> &trf_taps);
  torch::Tensor forward(const std::vector<FeatureMap> &trf_taps) {
    return Pool(trf_taps).embedding;
  }

 private:
  MhfaConfig cfg_;
  LayerWeights key_weights_{nullptr}, value_weights_{nullptr};
  torch::nn::Linear compress_k_{nullptr}, compress_v_{nullptr};
  torch::nn::Linear head_scores_{nullptr}, proj_{nullptr};
};
TORCH_MODULE(Mhfa);

struct TcnSpeakerConfig {
  std::int64_t enc_filters = 64;
  std::int64_t enc_kernel = 40;
  std::int64_t enc_stride = 20;
  std::int64_t channels = 64;
  std::int64_t hidden = 128;
  std::int64_t kernel = 3;
  int n_blocks = 3;
  std::int64_t embed_dim = kSpeakerEmbeddingDim;
};

// Baseline speaker encoder working on the enrollment waveform:
// conv encoder -> conv block -> TCN residual blocks -> time mean -> linear.
class TcnSpeakerEncoderImpl : public torch::nn::Module {
 public:
  explicit TcnSpeakerEncoderImpl(TcnSpeakerConfig cfg);
  // [B, L] -> [B, embed_dim]. Throws DataError if L < enc_kernel.
  torch::Tensor forward(const torch::Tensor &enrollment);

 private:
  TcnSpeakerConfig cfg_;
  torch::nn::Conv1d encoder_{nullptr};
  torch::nn::GroupNorm norm_{nullptr};
  torch::nn::Conv1d conv_block_{nullptr};
  torch::nn::ModuleList blocks_;
  torch::nn::Linear proj_{nullptr};
};
TORCH_MODULE(TcnSpeakerEncoder);

}  // namespace tse

#endif  // TSE_SPK_ENCODER_H_
