// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// TD-SpeakerBeam building blocks: learned 1-D conv encoder/decoder and a TCN
// mask extractor with multiplicative speaker conditioning after the first
// block. With fuse_ssl the extractor input is concat(Z_y, h) where h is the
// AIE output at the encoder frame rate.

#ifndef TSE_TDSB_H_
#define TSE_TDSB_H_

#include <optional>

#include <torch/torch.h>

#include "tse/feature_map.h"
#include "tse/tcn.h"

namespace tse {

struct TdsbConfig {
  std::int64_t enc_filters = 256;
  std::int64_t enc_kernel = 40;
  std::int64_t enc_stride = 20;  // 1.25 ms at 16 kHz
  int blocks_per_repeat = 8;     // X
  int repeats = 4;               // R
  std::int64_t bottleneck = 256;  // B
  std::int64_t hidden = 512;      // H
  std::int64_t kernel = 3;        // P
  bool fuse_ssl = false;
  std::int64_t ssl_channels = 0;  // AIE width when fuse_ssl
  std::int64_t embed_dim = 256;
  // Mask the fused features instead of Z_y (decoder then reads the fused
  // width). Off by default.
  bool mask_fused = false;
  int sample_rate = kDefaultSampleRate;

  static TdsbConfig Full();
  static TdsbConfig Tiny();

  std::int64_t ExtractorInputWidth() const {
    return enc_filters + (fuse_ssl ? ssl_channels : 0);
  }
  std::int64_t MaskWidth() const {
    return mask_fused ? ExtractorInputWidth() : enc_filters;
  }
  // floor((L - kernel) / stride) + 1; throws DataError when L < kernel.
  std::int64_t EncoderFrames(std::int64_t length) const;
  void Validate() const;
};

class TdsbEncoderImpl : public torch::nn::Module {
 public:
  explicit TdsbEncoderImpl(const TdsbConfig &cfg);
  // [B, L] -> Z_y [B, T, enc_filters], ReLU output.
  FeatureMap forward(const torch::Tensor &wave);

 private:
  TdsbConfig cfg_;
  torch::nn::Conv1d conv_{nullptr};
};
TORCH_MODULE(TdsbEncoder);

// Channel concatenation of the encoder output and the SSL stream.
FeatureMap Fuse(const FeatureMap &z_y, const FeatureMap &h);

class TdsbExtractorImpl : public torch::nn::Module {
 public:
  explicit TdsbExtractorImpl(const TdsbConfig &cfg);

  // z_in [B, T, ExtractorInputWidth()], e [B, embed_dim] -> mask in [0, 1]
  // of shape [B, T, MaskWidth()].
  torch::Tensor EstimateMask(const torch::Tensor &z_in, const torch::Tensor &e);

  // Z_s = mask * Z_y (or * z_in with mask_fused).
  FeatureMap forward(const FeatureMap &z_y, const std::optional<FeatureMap> &h,
                     const torch::Tensor &e);

  // Replaces the mask by all-ones (pass-through testing).
  void ForceUnitMask(bool on) { unit_mask_ = on; }
  torch::nn::Linear &spk_proj() { return spk_proj_; }

 private:
  TdsbConfig cfg_;
  bool unit_mask_ = false;
  torch::nn::LayerNorm in_norm_{nullptr};
  torch::nn::Conv1d bottleneck_{nullptr};
  torch::nn::ModuleList blocks_;
  torch::nn::Linear spk_proj_{nullptr};
  torch::nn::Conv1d mask_conv_{nullptr};
};
TORCH_MODULE(TdsbExtractor);

class TdsbDecoderImpl : public torch::nn::Module {
 public:
  explicit TdsbDecoderImpl(const TdsbConfig &cfg);
  // Transposed-conv overlap-add, zero-padded/cropped to `length` samples.
  torch::Tensor forward(const FeatureMap &z_s, std::int64_t length);

 private:
  TdsbConfig cfg_;
  torch::nn::ConvTranspose1d deconv_{nullptr};
};
TORCH_MODULE(TdsbDecoder);

// Pads with zeros or crops the last dimension to `length`.
torch::Tensor FitLength(const torch::Tensor &x, std::int64_t length);

}  // namespace tse

#endif  // TSE_TDSB_H_
