// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "tse/tdsb.h"

#include "tse/common.h"

namespace tse {

TdsbConfig TdsbConfig::Full() { return TdsbConfig{}; }

TdsbConfig TdsbConfig::Tiny() {
  TdsbConfig c;
  c.enc_filters = 64;
  c.bottleneck = 64;
  c.hidden = 128;
  c.blocks_per_repeat = 4;
  c.repeats = 2;
  return c;
}

std::int64_t TdsbConfig::EncoderFrames(std::int64_t length) const {
  if (length < enc_kernel)
    throw DataError(internal::Concat("input of ", length,
                                     " samples is shorter than the encoder "
                                     "kernel (", enc_kernel, ")"));
  return (length - enc_kernel) / enc_stride + 1;
}

void TdsbConfig::Validate() const {
  if (enc_stride < 1 || enc_kernel < enc_stride || enc_kernel % enc_stride != 0)
    throw ConfigError("tdsb.enc_stride must divide tdsb.enc_kernel");
  if (enc_filters < 1 || bottleneck < 1 || hidden < 1 || kernel < 1 ||
      kernel % 2 == 0)
    throw ConfigError("tdsb widths must be positive and the kernel odd");
  if (blocks_per_repeat < 1 || repeats < 1)
    throw ConfigError("tdsb needs at least one TCN block");
  if (fuse_ssl && ssl_channels < 1)
    throw ConfigError("tdsb.fuse_ssl requires a positive SSL width");
}

TdsbEncoderImpl::TdsbEncoderImpl(const TdsbConfig &cfg) : cfg_(cfg) {
  conv_ = register_module(
      "conv", torch::nn::Conv1d(
                  torch::nn::Conv1dOptions(1, cfg_.enc_filters, cfg_.enc_kernel)
                      .stride(cfg_.enc_stride)));
}

FeatureMap TdsbEncoderImpl::forward(const torch::Tensor &wave) {
  TSE_CHECK(wave.dim() == 2, "encoder expects [B, L], got ", wave.sizes());
  cfg_.EncoderFrames(wave.size(1));
  auto z = torch::relu(conv_->forward(wave.unsqueeze(1))).transpose(1, 2);
  return {z, cfg_.enc_stride, cfg_.sample_rate};
}

FeatureMap Fuse(const FeatureMap &z_y, const FeatureMap &h) {
  if (z_y.frames() != h.frames() || z_y.stride != h.stride)
    throw ShapeError(internal::Concat(
        "cannot fuse encoder features (", z_y.frames(), " frames, stride ",
        z_y.stride, ") with SSL features (", h.frames(), " frames, stride ",
        h.stride, ")"));
  return {torch::cat({z_y.data, h.data}, 2), z_y.stride, z_y.sample_rate};
}

TdsbExtractorImpl::TdsbExtractorImpl(const TdsbConfig &cfg) : cfg_(cfg) {
  cfg_.Validate();
  using torch::nn::Conv1dOptions;
  const std::int64_t in = cfg_.ExtractorInputWidth();
  in_norm_ = register_module(
      "in_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({in})));
  bottleneck_ = register_module(
      "bottleneck", torch::nn::Conv1d(Conv1dOptions(in, cfg_.bottleneck, 1)));
  blocks_ = register_module("blocks", torch::nn::ModuleList());
  for (int r = 0; r < cfg_.repeats; ++r)
    for (int x = 0; x < cfg_.blocks_per_repeat; ++x)
      blocks_->push_back(
          TcnBlock(cfg_.bottleneck, cfg_.hidden, cfg_.kernel, 1LL << x));
  spk_proj_ = register_module(
      "spk_proj", torch::nn::Linear(cfg_.embed_dim, cfg_.bottleneck));
  mask_conv_ = register_module(
      "mask_conv",
      torch::nn::Conv1d(Conv1dOptions(cfg_.bottleneck, cfg_.MaskWidth(), 1)));
}

torch::Tensor TdsbExtractorImpl::EstimateMask(const torch::Tensor &z_in,
                                              const torch::Tensor &e) {
  TSE_CHECK(z_in.size(2) == cfg_.ExtractorInputWidth(), "extractor expects ",
            cfg_.ExtractorInputWidth(), " input channels, got ", z_in.size(2));
  TSE_CHECK(e.dim() == 2 && e.size(1) == cfg_.embed_dim,
            "speaker embedding must be [B, ", cfg_.embed_dim, "], got ",
            e.sizes());
  auto x = bottleneck_->forward(in_norm_->forward(z_in).transpose(1, 2));
  for (std::size_t b = 0; b < blocks_->size(); ++b) {
    x = blocks_[b]->as<TcnBlock>()->forward(x);
    if (b == 0) x = x * spk_proj_->forward(e).unsqueeze(2);
  }
  return torch::sigmoid(mask_conv_->forward(x)).transpose(1, 2);
}

FeatureMap TdsbExtractorImpl::forward(const FeatureMap &z_y,
                                      const std::optional<FeatureMap> &h,
                                      const torch::Tensor &e) {
  if (cfg_.fuse_ssl)
    TSE_CHECK(h.has_value(), "extractor configured with fuse_ssl needs h");
  FeatureMap z_in = h && cfg_.fuse_ssl ? Fuse(z_y, *h) : z_y;
  const FeatureMap &masked = cfg_.mask_fused ? z_in : z_y;
  if (unit_mask_) return masked;
  auto mask = EstimateMask(z_in.data, e);
  return {mask * masked.data, z_y.stride, z_y.sample_rate};
}

TdsbDecoderImpl::TdsbDecoderImpl(const TdsbConfig &cfg) : cfg_(cfg) {
  deconv_ = register_module(
      "deconv",
      torch::nn::ConvTranspose1d(
          torch::nn::ConvTranspose1dOptions(cfg_.MaskWidth(), 1,
                                            cfg_.enc_kernel)
              .stride(cfg_.enc_stride)
              .bias(false)));
}

torch::Tensor TdsbDecoderImpl::forward(const FeatureMap &z_s,
                                       std::int64_t length) {
  auto y = deconv_->forward(z_s.data.transpose(1, 2)).squeeze(1);
  return FitLength(y, length);
}

torch::Tensor FitLength(const torch::Tensor &x, std::int64_t length) {
  const std::int64_t n = x.size(-1);
  if (n == length) return x;
  if (n > length) return x.narrow(-1, 0, length);
  return torch::constant_pad_nd(x, {0, length - n});
}

}  // namespace tse
