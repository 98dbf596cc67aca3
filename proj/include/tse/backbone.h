// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// WavLM/wav2vec2-style SSL backbone: a valid-convolution CNN encoder followed
// by a post-LN Transformer stack, exposing every intermediate output.
// Parameter names follow the Hugging Face WavLM layout so that pretrained
// checkpoints map on with a short (or empty) name map.

#ifndef TSE_BACKBONE_H_
#define TSE_BACKBONE_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "tse/archive.h"
#include "tse/feature_map.h"

namespace tse {

struct ConvLayerSpec {
  std::int64_t kernel = 1;
  std::int64_t stride = 1;
  std::int64_t channels = 1;
};

enum class PositionScheme { kAbsolute, kConv };

struct BackboneConfig {
  std::vector<ConvLayerSpec> conv_layers;
  int n_transformer_blocks = 4;
  std::int64_t model_dim = 128;
  int n_heads = 2;
  std::int64_t ff_dim = 256;
  PositionScheme positions = PositionScheme::kAbsolute;
  std::int64_t max_positions = 2048;  // absolute scheme only
  std::int64_t pos_conv_kernel = 128;  // conv scheme only
  std::int64_t pos_conv_groups = 16;
  int sample_rate = kDefaultSampleRate;

  // Kernels (10,3,3,3,3,2,2), strides (5,2,2,2,2,2,2): 320-sample hop.
  static BackboneConfig Tiny();
  static BackboneConfig BaseCompatible();

  int num_conv_layers() const { return static_cast<int>(conv_layers.size()); }
  // Product of strides 1..j (1-based).
  std::int64_t CumulativeStride(int j) const;
  // Throws ConfigError when an invariant is violated.
  void Validate() const;
};

// Minimum input length that yields one frame at CNN level j.
std::int64_t ReceptiveField(const BackboneConfig &cfg, int j);

// Frames produced at CNN level j for an input of `length` samples:
// repeated floor((L - k) / s) + 1. Throws DataError below the receptive field.
std::int64_t FrameCount(const BackboneConfig &cfg, std::int64_t length, int j);

enum class BackboneMode { kFrozen, kTrainable };

class ConvLayerImpl : public torch::nn::Module {
 public:
  ConvLayerImpl(std::int64_t in, const ConvLayerSpec &spec, bool group_norm);
  torch::Tensor forward(const torch::Tensor &x);

 private:
  torch::nn::Conv1d conv_{nullptr};
  torch::nn::GroupNorm layer_norm_{nullptr};
};
TORCH_MODULE(ConvLayer);

class FeatureProjectionImpl : public torch::nn::Module {
 public:
  FeatureProjectionImpl(std::int64_t in, std::int64_t out);
  torch::Tensor forward(const torch::Tensor &x);

 private:
  torch::nn::LayerNorm layer_norm_{nullptr};
  torch::nn::Linear projection_{nullptr};
};
TORCH_MODULE(FeatureProjection);

// Weight-normalized grouped convolution (weight = g * v / |v|, norm over all
// dims but the kernel axis), stored as weight_g / weight_v.
class PosConvEmbeddingImpl : public torch::nn::Module {
 public:
  PosConvEmbeddingImpl(std::int64_t dim, std::int64_t kernel,
                       std::int64_t groups);
  torch::Tensor forward(const torch::Tensor &x);  // [B, T, D] -> [B, T, D]

 private:
  std::int64_t kernel_, groups_;
  torch::Tensor weight_g_, weight_v_, bias_;
};
TORCH_MODULE(PosConvEmbedding);

class SelfAttentionImpl : public torch::nn::Module {
 public:
  SelfAttentionImpl(std::int64_t dim, int heads);
  torch::Tensor forward(const torch::Tensor &x);

 private:
  int heads_;
  torch::nn::Linear q_proj_{nullptr}, k_proj_{nullptr}, v_proj_{nullptr},
      out_proj_{nullptr};
};
TORCH_MODULE(SelfAttention);

class TransformerLayerImpl : public torch::nn::Module {
 public:
  TransformerLayerImpl(std::int64_t dim, int heads, std::int64_t ff_dim);
  torch::Tensor forward(const torch::Tensor &x);

 private:
  SelfAttention attention_{nullptr};
  torch::nn::LayerNorm layer_norm_{nullptr};
  torch::nn::Linear intermediate_dense_{nullptr}, output_dense_{nullptr};
  torch::nn::LayerNorm final_layer_norm_{nullptr};
};
TORCH_MODULE(TransformerLayer);

struct BackboneImportReport {
  std::vector<std::string> assigned;
  std::vector<std::string> unmatched;  // checkpoint tensors with no target
};

class BackboneImpl : public torch::nn::Module {
 public:
  explicit BackboneImpl(BackboneConfig cfg);

  const BackboneConfig &config() const { return cfg_; }

  // Input [B, L]. With run_transformer == false only the CNN taps are
  // computed. Frozen mode runs without autograd and returns detached taps.
  LayerTaps ForwardFeatures(const torch::Tensor &wave, BackboneMode mode,
                            bool run_transformer = true);

  // Marks every backbone parameter as (non-)trainable.
  void SetTrainable(bool trainable);

  // Test hook: called with (block index, block input) for every block.
  void SetBlockInputHook(
      std::function<void(int, const torch::Tensor &)> hook) {
    block_input_hook_ = std::move(hook);
  }

  TensorArchive ExportCheckpoint() const;

  // Assigns every parameter exactly once from `archive`. Archive names are
  // first stripped of `source_prefix`, then renamed through `name_map`.
  // Throws DataError on shape mismatch, double assignment or any backbone
  // parameter left unassigned.
  BackboneImportReport ImportCheckpoint(
      const TensorArchive &archive,
      const std::map<std::string, std::string> &name_map = {},
      const std::string &source_prefix = "");

 private:
  LayerTaps Run(const torch::Tensor &wave, bool run_transformer);

  BackboneConfig cfg_;
  torch::nn::ModuleList conv_layers_;
  FeatureProjection feature_projection_{nullptr};
  PosConvEmbedding pos_conv_embed_{nullptr};
  torch::Tensor pos_embed_;
  torch::nn::LayerNorm encoder_layer_norm_{nullptr};
  torch::nn::ModuleList layers_;
  std::function<void(int, const torch::Tensor &)> block_input_hook_;
};
TORCH_MODULE(Backbone);

}  // namespace tse

#endif  // TSE_BACKBONE_H_
