// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef TSE_AGGREGATION_H_
#define TSE_AGGREGATION_H_

#include <string>
#include <vector>

#include <torch/torch.h>

#include "tse/feature_map.h"

namespace tse {

// Learnable convex layer weights: softmax over free logits, zero-initialized
// (uniform weights).
class LayerWeightsImpl : public torch::nn::Module {
 public:
  explicit LayerWeightsImpl(std::int64_t n_layers);

  std::int64_t size() const { return logits_.size(0); }
  torch::Tensor Normalized() const { return torch::softmax(logits_, 0); }
  torch::Tensor &logits() { return logits_; }
  const torch::Tensor &logits() const { return logits_; }

 private:
  torch::Tensor logits_;
};
TORCH_MODULE(LayerWeights);

// output[b, t, c] = sum_i weights[i] * taps[i][b, t, c]. All taps must share
// shape and stride; `weights` is a normalized 1-D tensor of taps.size().
FeatureMap WeightedSum(const std::vector<FeatureMap> &taps,
                       const torch::Tensor &weights);
FeatureMap WeightedSum(const std::vector<FeatureMap> &taps,
                       const LayerWeights &weights);

struct WeightRecord {
  std::string label;
  std::vector<double> weights;  // normalized
};

WeightRecord ExportWeights(const LayerWeights &weights,
                           const std::string &label);

// "label,w_0,...,w_N" with `digits` decimals.
std::string FormatWeightsRow(const WeightRecord &record, int digits = 4);

}  // namespace tse

#endif  // TSE_AGGREGATION_H_
