// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Adaptive Input Enhancer: top-down progressive upsampling over the CNN
// encoder taps of an SSL backbone, optionally seeded from a weighted sum of
// the Transformer taps, producing a feature stream at the extractor's frame
// rate.
//
// With the standard conv stack (cumulative strides 5, 10, 20, ..., 320) and a
// 20-sample target stride the recursion runs
//
//   T_top  = Linear(sum_i w_i H^trf_i)                 stride 320
//   T_7    = DeConv(Fuse(H^cnn_7, T_top))              stride 160
//   ...
//   T_4    = DeConv(Fuse(H^cnn_4, T_5))                stride 20
//   h      = Fuse'(H^cnn_3, T_4)                       stride 20
//
// where Fuse is Conv1x1(H) + T (FPM) or Concat(H, T) (U-Net), and Fuse' is
// the same fusion without the deconvolution. Every block output is cropped to
// the frame count of the next finer CNN tap.

#ifndef TSE_AIE_H_
#define TSE_AIE_H_

#include <optional>
#include <vector>

#include <torch/torch.h>

#include "tse/aggregation.h"
#include "tse/backbone.h"
#include "tse/feature_map.h"

namespace tse {

enum class AieFusion { kFpm, kUnet };

enum class AieSource {
  kMultiCnn,
  kMultiCnnPlusTransformer,
  kSingleCnn,
  kTransformerOnly,
};

bool UsesTransformer(AieSource source);

struct AieConfig {
  AieFusion fusion = AieFusion::kFpm;
  AieSource source = AieSource::kMultiCnnPlusTransformer;
  std::int64_t target_stride = 20;
  std::int64_t channels = 64;
  // GELU between levels; disabled only to test block linearity.
  bool activation = true;
};

// One top-down level. Maps features at `in_stride` to `in_stride / stride`
// with a transposed convolution of kernel 2 * stride.
class UpsampleBlockImpl : public torch::nn::Module {
 public:
  // cnn_channels == 0: no CNN input (Transformer-only chain).
  // top_channels == 0: no deeper input (topmost block of a CNN-only pyramid).
  UpsampleBlockImpl(AieFusion fusion, std::int64_t cnn_channels,
                    std::int64_t top_channels, std::int64_t channels,
                    std::int64_t stride);

  // FPM: DeConv(Conv(h_cnn) + t_next);  U-Net: DeConv(Concat(h_cnn, t_next)).
  // t_next is aligned to h_cnn with the crop rule. When target_frames >= 0
  // the output is cropped to it.
  FeatureMap forward(const std::optional<FeatureMap> &h_cnn,
                     const std::optional<FeatureMap> &t_next,
                     std::int64_t target_frames = -1);

  std::int64_t deconv_in_channels() const { return deconv_in_; }
  std::int64_t stride() const { return stride_; }
  torch::nn::ConvTranspose1d &deconv() { return deconv_; }
  torch::nn::Conv1d &lateral() { return lateral_; }

 private:
  AieFusion fusion_;
  std::int64_t stride_;
  std::int64_t deconv_in_;
  torch::nn::Conv1d lateral_{nullptr};
  torch::nn::ConvTranspose1d deconv_{nullptr};
};
TORCH_MODULE(UpsampleBlock);

class AieImpl : public torch::nn::Module {
 public:
  // Throws ConfigError when no CNN level has cumulative stride
  // cfg.target_stride (the message lists the available strides).
  AieImpl(AieConfig cfg, const BackboneConfig &backbone);

  const AieConfig &config() const { return cfg_; }
  // 1-based CNN level whose cumulative stride equals the target stride.
  int target_level() const { return target_level_; }

  // T_top = Linear(sum_i w_i H^trf_i). Throws ConfigError for sources that
  // do not use the Transformer.
  FeatureMap InitTop(const std::vector<FeatureMap> &trf_taps);

  FeatureMap forward(const LayerTaps &taps);

  LayerWeights top_weights() const { return top_weights_; }
  // Blocks ordered from the deepest level downwards.
  const std::vector<UpsampleBlock> &blocks() const { return blocks_; }

 private:
  AieConfig cfg_;
  int num_levels_;
  int target_level_;
  LayerWeights top_weights_{nullptr};
  torch::nn::Linear top_proj_{nullptr};
  std::vector<UpsampleBlock> blocks_;
  torch::nn::Conv1d output_fusion_{nullptr};
};
TORCH_MODULE(Aie);

}  // namespace tse

#endif  // TSE_AIE_H_
