// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// SUPERB-style downstream: two weighted sums over the Transformer taps (one
// for the speaker encoder, one for the extractor), a 3-layer BLSTM mask
// estimator conditioned by e after the first BLSTM, and STFT masking.

#ifndef TSE_SUPERB_H_
#define TSE_SUPERB_H_

#include <optional>
#include <vector>

#include <torch/torch.h>

#include "tse/aggregation.h"
#include "tse/feature_map.h"

namespace tse {

struct StftConfig {
  std::int64_t fft_size = 1024;
  std::int64_t window = 1024;
  std::int64_t hop = 320;  // matches the 20 ms SSL frame rate

  std::int64_t bins() const { return fft_size / 2 + 1; }
  // Centered STFT: 1 + floor(L / hop).
  std::int64_t Frames(std::int64_t length) const { return 1 + length / hop; }
};

// Complex spectrogram [B, T, F] of a [B, L] batch (Hann window, centered).
torch::Tensor Stft(const torch::Tensor &wave, const StftConfig &cfg);
// Inverse of Stft, trimmed or zero-padded to `length` samples.
torch::Tensor Istft(const torch::Tensor &spec, const StftConfig &cfg,
                    std::int64_t length);

struct SuperbConfig {
  int blstm_layers = 3;
  std::int64_t blstm_dim = 512;  // output width (both directions)
  std::int64_t spk_dim = 512;
  StftConfig stft;

  static SuperbConfig Full() { return SuperbConfig{}; }
  static SuperbConfig Tiny();
  void Validate() const;
};

class SuperbHeadImpl : public torch::nn::Module {
 public:
  // n_taps: Transformer taps (N + 1); input_dim: their width.
  SuperbHeadImpl(SuperbConfig cfg, std::int64_t n_taps, std::int64_t input_dim);

  const SuperbConfig &config() const { return cfg_; }

  // Weighted sum over the enrollment taps, mean over frames, linear.
  torch::Tensor SpeakerEmbed(const std::vector<FeatureMap> &enroll_taps);

  // Mask [B, frames, bins] in [0, 1]. `frames` is the STFT frame count the
  // SSL stream is aligned to (pad/crop within kCropTolerance).
  torch::Tensor EstimateMask(const std::vector<FeatureMap> &mix_taps,
                             const torch::Tensor &e, std::int64_t frames);

  // Mask times the complex mixture STFT, then iSTFT to the mixture length.
  torch::Tensor Extract(const torch::Tensor &mixture,
                        const std::vector<FeatureMap> &mix_taps,
                        const torch::Tensor &e);

  // Debug: replace the estimated mask by a constant.
  void ForceMask(std::optional<double> value) { forced_mask_ = value; }

  LayerWeights spk_weights() const { return spk_weights_; }
  LayerWeights ext_weights() const { return ext_weights_; }

 private:
  SuperbConfig cfg_;
  std::optional<double> forced_mask_;
  LayerWeights spk_weights_{nullptr}, ext_weights_{nullptr};
  torch::nn::Linear spk_proj_{nullptr};
  std::vector<torch::nn::LSTM> blstms_;
  torch::nn::Linear mask_proj_{nullptr};
};
TORCH_MODULE(SuperbHead);

}  // namespace tse

#endif  // TSE_SUPERB_H_
