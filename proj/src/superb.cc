// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "tse/superb.h"

#include "tse/common.h"

namespace tse {

namespace {

torch::Tensor HannWindow(const StftConfig &cfg, const torch::Tensor &like) {
  return torch::hann_window(cfg.window,
                            torch::TensorOptions()
                                .dtype(like.scalar_type())
                                .device(like.device()));
}

}  // namespace

torch::Tensor Stft(const torch::Tensor &wave, const StftConfig &cfg) {
  TSE_CHECK(wave.dim() == 2, "STFT expects [B, L], got ", wave.sizes());
  auto spec = torch::stft(wave, cfg.fft_size, cfg.hop, cfg.window,
                          HannWindow(cfg, wave), /*center=*/true, "constant",
                          /*normalized=*/false, /*onesided=*/true,
                          /*return_complex=*/true);
  return spec.transpose(1, 2);  // [B, F, T] -> [B, T, F]
}

torch::Tensor Istft(const torch::Tensor &spec, const StftConfig &cfg,
                    std::int64_t length) {
  auto window = HannWindow(cfg, torch::real(spec));
  return torch::istft(spec.transpose(1, 2), cfg.fft_size, cfg.hop, cfg.window,
                      window, /*center=*/true, /*normalized=*/false,
                      /*onesided=*/true, length, /*return_complex=*/false);
}

SuperbConfig SuperbConfig::Tiny() {
  SuperbConfig c;
  c.blstm_dim = 128;
  c.spk_dim = 128;
  return c;
}

void SuperbConfig::Validate() const {
  if (blstm_layers < 2)
    throw ConfigError("superb.blstm_layers must be at least 2");
  if (blstm_dim < 2 || blstm_dim % 2 != 0)
    throw ConfigError("superb.blstm_dim must be even");
  if (spk_dim != blstm_dim)
    throw ConfigError(internal::Concat(
        "superb.spk_dim (", spk_dim, ") must equal superb.blstm_dim (",
        blstm_dim, ")"));
  if (stft.window > stft.fft_size || stft.hop < 1 || stft.hop > stft.window)
    throw ConfigError("superb.stft: need hop <= window <= fft_size");
}

SuperbHeadImpl::SuperbHeadImpl(SuperbConfig cfg, std::int64_t n_taps,
                               std::int64_t input_dim)
    : cfg_(cfg) {
  cfg_.Validate();
  spk_weights_ = register_module("spk_weights", LayerWeights(n_taps));
  ext_weights_ = register_module("ext_weights", LayerWeights(n_taps));
  spk_proj_ = register_module("spk_proj",
                              torch::nn::Linear(input_dim, cfg_.spk_dim));
  for (int i = 0; i < cfg_.blstm_layers; ++i) {
    const std::int64_t in = i == 0 ? input_dim : cfg_.blstm_dim;
    blstms_.push_back(register_module(
        "blstm" + std::to_string(i),
        torch::nn::LSTM(torch::nn::LSTMOptions(in, cfg_.blstm_dim / 2)
                            .batch_first(true)
                            .bidirectional(true))));
  }
  mask_proj_ = register_module(
      "mask_proj", torch::nn::Linear(cfg_.blstm_dim, cfg_.stft.bins()));
}

torch::Tensor SuperbHeadImpl::SpeakerEmbed(
    const std::vector<FeatureMap> &enroll_taps) {
  TSE_CHECK(!enroll_taps.empty(), "no enrollment taps");
  if (enroll_taps[0].frames() < 1)
    throw DataError("enrollment produced zero SSL frames");
  auto x = WeightedSum(enroll_taps, spk_weights_).data;
  return spk_proj_->forward(x.mean(1));
}

torch::Tensor SuperbHeadImpl::EstimateMask(
    const std::vector<FeatureMap> &mix_taps, const torch::Tensor &e,
    std::int64_t frames) {
  TSE_CHECK(e.dim() == 2 && e.size(1) == cfg_.spk_dim,
            "speaker embedding must be [B, ", cfg_.spk_dim, "], got ",
            e.sizes());
  auto x = WeightedSum(mix_taps, ext_weights_).data;
  x = MatchFrames(x, frames, "SSL features vs STFT frames");
  for (std::size_t i = 0; i < blstms_.size(); ++i) {
    x = std::get<0>(blstms_[i]->forward(x));
    if (i == 0) x = x * e.unsqueeze(1);
  }
  return torch::sigmoid(mask_proj_->forward(x));
}

torch::Tensor SuperbHeadImpl::Extract(const torch::Tensor &mixture,
                                      const std::vector<FeatureMap> &mix_taps,
                                      const torch::Tensor &e) {
  auto spec = Stft(mixture, cfg_.stft);
  torch::Tensor mask;
  if (forced_mask_)
    mask = torch::full(spec.sizes(), *forced_mask_,
                       torch::TensorOptions().dtype(mixture.scalar_type()));
  else
    mask = EstimateMask(mix_taps, e, spec.size(1));
  return Istft(spec * mask, cfg_.stft, mixture.size(1));
}

}  // namespace tse
