// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "tse/feature_map.h"

#include <cstring>

#include "tse/common.h"

namespace tse {

namespace {

std::vector<std::int64_t> Sizes(const torch::Tensor &t) {
  return std::vector<std::int64_t>(t.sizes().begin(), t.sizes().end());
}

}  // namespace

torch::Tensor CropFrames(const torch::Tensor &x, std::int64_t target,
                         const std::string &what) {
  std::int64_t frames = x.size(1);
  std::int64_t excess = frames - target;
  TSE_CHECK(excess >= 0 && excess <= kCropTolerance, what, ": ", frames,
            " frames cannot be cropped to ", target, " (tolerance ",
            kCropTolerance, ")");
  if (excess == 0) return x;
  std::int64_t front = excess / 2;
  return x.narrow(1, front, target);
}

torch::Tensor MatchFrames(const torch::Tensor &x, std::int64_t target,
                          const std::string &what) {
  std::int64_t frames = x.size(1);
  if (frames >= target) return CropFrames(x, target, what);
  TSE_CHECK(target - frames <= kCropTolerance, what, ": ", frames,
            " frames cannot be padded to ", target, " (tolerance ",
            kCropTolerance, ")");
  auto last = x.narrow(1, frames - 1, 1);
  auto pad = last.expand({x.size(0), target - frames, x.size(2)});
  return torch::cat({x, pad}, 1);
}

torch::Tensor WaveToTensor(const Waveform &wave) {
  return torch::from_blob(const_cast<float *>(wave.samples.data()),
                          {static_cast<std::int64_t>(wave.samples.size())},
                          torch::kFloat32)
      .clone();
}

Waveform TensorToWave(const torch::Tensor &x, int sample_rate) {
  auto flat = x.detach().to(torch::kFloat32).contiguous().view({-1});
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.assign(flat.data_ptr<float>(),
                   flat.data_ptr<float>() + flat.numel());
  return w;
}

ArchiveTensor ToArchiveTensor(const torch::Tensor &t) {
  auto c = t.detach().to(torch::kFloat32).contiguous();
  ArchiveTensor a;
  a.shape = Sizes(c);
  a.data.assign(c.data_ptr<float>(), c.data_ptr<float>() + c.numel());
  return a;
}

torch::Tensor FromArchiveTensor(const ArchiveTensor &t) {
  auto out = torch::empty(t.shape, torch::kFloat32);
  if (!t.data.empty())
    std::memcpy(out.data_ptr<float>(), t.data.data(),
                t.data.size() * sizeof(float));
  return out;
}

void AddModuleToArchive(const torch::nn::Module &module,
                        const std::string &prefix, TensorArchive *archive) {
  for (const auto &p : module.named_parameters(true))
    archive->tensors[prefix + p.key()] = ToArchiveTensor(p.value());
  for (const auto &b : module.named_buffers(true))
    archive->tensors[prefix + b.key()] = ToArchiveTensor(b.value());
}

void LoadModuleFromArchive(torch::nn::Module &module,
                           const TensorArchive &archive,
                           const std::string &prefix) {
  torch::NoGradGuard no_grad;
  auto assign = [&](const std::string &name, torch::Tensor &dst) {
    auto it = archive.tensors.find(prefix + name);
    if (it == archive.tensors.end())
      throw DataError("checkpoint is missing tensor " + prefix + name);
    if (it->second.shape != Sizes(dst))
      throw DataError("shape mismatch for " + prefix + name + ": checkpoint " +
                      ShapeString(it->second.shape) + " vs model " +
                      ShapeString(Sizes(dst)));
    dst.copy_(FromArchiveTensor(it->second));
  };
  for (auto &p : module.named_parameters(true)) assign(p.key(), p.value());
  for (auto &b : module.named_buffers(true)) assign(b.key(), b.value());
}

}  // namespace tse
