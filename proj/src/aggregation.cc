// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "tse/aggregation.h"

#include <iomanip>
#include <sstream>

#include "tse/common.h"

namespace tse {

LayerWeightsImpl::LayerWeightsImpl(std::int64_t n_layers) {
  TSE_CHECK(n_layers >= 1, "layer weights need at least one layer");
  logits_ = register_parameter("logits", torch::zeros({n_layers}));
}

FeatureMap WeightedSum(const std::vector<FeatureMap> &taps,
                       const torch::Tensor &weights) {
  TSE_CHECK(!taps.empty(), "weighted sum over zero taps");
  TSE_CHECK(weights.dim() == 1 &&
                weights.size(0) == static_cast<std::int64_t>(taps.size()),
            "weighted sum: ", taps.size(), " taps but weights of shape ",
            weights.sizes());
  const auto &first = taps.front();
  std::vector<torch::Tensor> stack;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    TSE_CHECK(taps[i].data.sizes() == first.data.sizes(),
              "weighted sum: tap ", i, " has shape ", taps[i].data.sizes(),
              ", expected ", first.data.sizes());
    TSE_CHECK(taps[i].stride == first.stride, "weighted sum: tap ", i,
              " has stride ", taps[i].stride, ", expected ", first.stride);
    stack.push_back(taps[i].data);
  }
  auto stacked = torch::stack(stack, 0);  // [K, B, T, C]
  auto w = weights.to(stacked.dtype()).view({-1, 1, 1, 1});
  return {(stacked * w).sum(0), first.stride, first.sample_rate};
}

FeatureMap WeightedSum(const std::vector<FeatureMap> &taps,
                       const LayerWeights &weights) {
  return WeightedSum(taps, weights->Normalized());
}

WeightRecord ExportWeights(const LayerWeights &weights,
                           const std::string &label) {
  torch::NoGradGuard no_grad;
  auto w = torch::softmax(weights->logits().to(torch::kFloat64), 0).contiguous();
  WeightRecord r;
  r.label = label;
  r.weights.assign(w.data_ptr<double>(), w.data_ptr<double>() + w.numel());
  return r;
}

std::string FormatWeightsRow(const WeightRecord &record, int digits) {
  std::ostringstream os;
  os << record.label << std::fixed << std::setprecision(digits);
  for (double w : record.weights) os << "," << w;
  return os.str();
}

}  // namespace tse
