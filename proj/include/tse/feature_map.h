// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef TSE_FEATURE_MAP_H_
#define TSE_FEATURE_MAP_H_

#include <string>
#include <vector>

#include <torch/torch.h>

#include "tse/archive.h"
#include "tse/wav.h"

namespace tse {

// Largest frame mismatch the crop rule absorbs (valid-conv edge effects).
inline constexpr std::int64_t kCropTolerance = 2;

// Batched frames x channels map; data is [B, T, C].
struct FeatureMap {
  torch::Tensor data;
  std::int64_t stride = 1;  // waveform samples per frame
  int sample_rate = kDefaultSampleRate;

  std::int64_t frames() const { return data.size(1); }
  std::int64_t channels() const { return data.size(2); }
};

// Intermediate backbone outputs. cnn holds H^cnn_1..J at indices 0..J-1,
// trf holds H^trf_0..N where trf[0] is the input of the first Transformer
// block. trf is empty when the Transformer stack was not run.
struct LayerTaps {
  std::vector<FeatureMap> cnn;
  std::vector<FeatureMap> trf;

  // 1-based CNN level accessor.
  const FeatureMap &Cnn(int j) const { return cnn.at(j - 1); }
};

// Drops surplus frames along dim 1 so that x has `target` frames: half the
// excess from the front, the remainder from the back. Fails when the excess
// exceeds kCropTolerance or x is shorter than target.
torch::Tensor CropFrames(const torch::Tensor &x, std::int64_t target,
                         const std::string &what);

// Pads (by repeating the last frame) or crops x along dim 1 to `target`
// frames; the mismatch must be within kCropTolerance.
torch::Tensor MatchFrames(const torch::Tensor &x, std::int64_t target,
                          const std::string &what);

torch::Tensor WaveToTensor(const Waveform &wave);
Waveform TensorToWave(const torch::Tensor &x, int sample_rate);

ArchiveTensor ToArchiveTensor(const torch::Tensor &t);
torch::Tensor FromArchiveTensor(const ArchiveTensor &t);

// Stores every parameter and buffer of `module` under prefix + name.
void AddModuleToArchive(const torch::nn::Module &module,
                        const std::string &prefix, TensorArchive *archive);

// Copies prefix + name entries into the module. Every parameter and buffer
// must be present with a matching shape; extra archive entries are ignored.
void LoadModuleFromArchive(torch::nn::Module &module,
                           const TensorArchive &archive,
                           const std::string &prefix);

}  // namespace tse

#endif  // TSE_FEATURE_MAP_H_
