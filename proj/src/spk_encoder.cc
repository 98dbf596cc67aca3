// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "tse/spk_encoder.h"

#include "tse/common.h"

namespace tse {

TcnBlockImpl::TcnBlockImpl(std::int64_t channels, std::int64_t hidden,
                           std::int64_t kernel, std::int64_t dilation) {
  using torch::nn::Conv1dOptions;
  in_conv_ = register_module(
      "in_conv", torch::nn::Conv1d(Conv1dOptions(channels, hidden, 1)));
  act1_ = register_module("act1", torch::nn::PReLU());
  norm1_ = register_module(
      "norm1", torch::nn::GroupNorm(torch::nn::GroupNormOptions(1, hidden)));
  depthwise_ = register_module(
      "depthwise",
      torch::nn::Conv1d(Conv1dOptions(hidden, hidden, kernel)
                            .dilation(dilation)
                            .padding(dilation * (kernel - 1) / 2)
                            .groups(hidden)));
  act2_ = register_module("act2", torch::nn::PReLU());
  norm2_ = register_module(
      "norm2", torch::nn::GroupNorm(torch::nn::GroupNormOptions(1, hidden)));
  out_conv_ = register_module(
      "out_conv", torch::nn::Conv1d(Conv1dOptions(hidden, channels, 1)));
}

torch::Tensor TcnBlockImpl::forward(const torch::Tensor &x) {
  auto y = norm1_->forward(act1_->forward(in_conv_->forward(x)));
  y = norm2_->forward(act2_->forward(depthwise_->forward(y)));
  return x + out_conv_->forward(y);
}

MhfaImpl::MhfaImpl(MhfaConfig cfg, std::int64_t n_layers,
                   std::int64_t input_dim)
    : cfg_(cfg) {
  TSE_CHECK(cfg_.n_heads > 0 && cfg_.key_dim > 0 && cfg_.value_dim > 0 &&
                cfg_.embed_dim > 0,
            "invalid MHFA configuration");
  key_weights_ = register_module("key_weights", LayerWeights(n_layers));
  value_weights_ = register_module("value_weights", LayerWeights(n_layers));
  compress_k_ = register_module("compress_k",
                                torch::nn::Linear(input_dim, cfg_.key_dim));
  compress_v_ = register_module("compress_v",
                                torch::nn::Linear(input_dim, cfg_.value_dim));
  head_scores_ = register_module(
      "head_scores", torch::nn::Linear(cfg_.key_dim, cfg_.n_heads));
  proj_ = register_module(
      "proj", torch::nn::Linear(cfg_.n_heads * cfg_.value_dim, cfg_.embed_dim));
}

MhfaOutput MhfaImpl::Pool(const std::vector<FeatureMap> &trf_taps) {
  TSE_CHECK(!trf_taps.empty() && trf_taps[0].frames() > 0,
            "MHFA needs at least one frame");
  TSE_CHECK(static_cast<std::int64_t>(trf_taps.size()) == key_weights_->size(),
            "MHFA expects ", key_weights_->size(), " taps, got ",
            trf_taps.size());
  auto keys = compress_k_->forward(WeightedSum(trf_taps, key_weights_).data);
  auto values =
      compress_v_->forward(WeightedSum(trf_taps, value_weights_).data);
  // [B, T, H] -> softmax over T -> [B, H, T]
  auto attention =
      torch::softmax(head_scores_->forward(keys), 1).transpose(1, 2);
  auto pooled = torch::matmul(attention, values);  // [B, H, value_dim]
  auto embedding = proj_->forward(pooled.flatten(1));
  return {embedding, attention};
}

TcnSpeakerEncoderImpl::TcnSpeakerEncoderImpl(TcnSpeakerConfig cfg)
    : cfg_(cfg) {
  using torch::nn::Conv1dOptions;
  encoder_ = register_module(
      "encoder",
      torch::nn::Conv1d(Conv1dOptions(1, cfg_.enc_filters, cfg_.enc_kernel)
                            .stride(cfg_.enc_stride)));
  norm_ = register_module(
      "norm",
      torch::nn::GroupNorm(torch::nn::GroupNormOptions(1, cfg_.enc_filters)));
  conv_block_ = register_module(
      "conv_block",
      torch::nn::Conv1d(Conv1dOptions(cfg_.enc_filters, cfg_.channels, 1)));
  blocks_ = register_module("blocks", torch::nn::ModuleList());
  for (int b = 0; b < cfg_.n_blocks; ++b)
    blocks_->push_back(
        TcnBlock(cfg_.channels, cfg_.hidden, cfg_.kernel, 1LL << b));
  proj_ = register_module("proj",
                          torch::nn::Linear(cfg_.channels, cfg_.embed_dim));
}

torch::Tensor TcnSpeakerEncoderImpl::forward(const torch::Tensor &enrollment) {
  TSE_CHECK(enrollment.dim() == 2, "enrollment must be [B, L]");
  if (enrollment.size(1) < cfg_.enc_kernel)
    throw DataError(internal::Concat("enrollment of ", enrollment.size(1),
                                     " samples is shorter than the encoder "
                                     "kernel (", cfg_.enc_kernel, ")"));
  auto x = torch::relu(encoder_->forward(enrollment.unsqueeze(1)));
  x = torch::relu(conv_block_->forward(norm_->forward(x)));
  for (const auto &b : *blocks_) x = b->as<TcnBlock>()->forward(x);
  return proj_->forward(x.mean(2));
}

}  // namespace tse
