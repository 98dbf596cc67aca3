// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef TSE_TCN_H_
#define TSE_TCN_H_

#include <torch/torch.h>

namespace tse {

// Conv-TasNet residual block on [B, C, T]:
// 1x1 conv -> PReLU -> gLN -> dilated depthwise conv -> PReLU -> gLN -> 1x1.
class TcnBlockImpl : public torch::nn::Module {
 public:
  TcnBlockImpl(std::int64_t channels, std::int64_t hidden, std::int64_t kernel,
               std::int64_t dilation);
  torch::Tensor forward(const torch::Tensor &x);

 private:
  torch::nn::Conv1d in_conv_{nullptr};
  torch::nn::PReLU act1_{nullptr};
  torch::nn::GroupNorm norm1_{nullptr};
  torch::nn::Conv1d depthwise_{nullptr};
  torch::nn::PReLU act2_{nullptr};
  torch::nn::GroupNorm norm2_{nullptr};
  torch::nn::Conv1d out_conv_{nullptr};
};
TORCH_MODULE(TcnBlock);

}  // namespace tse

#endif  // TSE_TCN_H_
