// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "tse/aie.h"

#include "tse/common.h"

namespace tse {

namespace {

// [B, T, C] <-> [B, C, T] around the 1-D convolutions.
torch::Tensor Conv(torch::nn::Conv1d &conv, const torch::Tensor &x) {
  return conv->forward(x.transpose(1, 2)).transpose(1, 2);
}

}  // namespace

bool UsesTransformer(AieSource source) {
  return source == AieSource::kMultiCnnPlusTransformer ||
         source == AieSource::kTransformerOnly;
}

UpsampleBlockImpl::UpsampleBlockImpl(AieFusion fusion,
                                     std::int64_t cnn_channels,
                                     std::int64_t top_channels,
                                     std::int64_t channels,
                                     std::int64_t stride)
    : fusion_(fusion), stride_(stride) {
  TSE_CHECK(cnn_channels > 0 || top_channels > 0,
            "upsample block needs at least one input");
  TSE_CHECK(stride >= 1 && channels > 0, "invalid upsample block geometry");
  if (cnn_channels > 0 && fusion == AieFusion::kFpm) {
    lateral_ = register_module(
        "lateral",
        torch::nn::Conv1d(torch::nn::Conv1dOptions(cnn_channels, channels, 1)));
    if (top_channels > 0)
      TSE_CHECK(top_channels == channels,
                "FPM addition needs equal widths: ", top_channels, " vs ",
                channels);
    deconv_in_ = channels;
  } else {
    deconv_in_ = cnn_channels + top_channels;
  }
  deconv_ = register_module(
      "deconv", torch::nn::ConvTranspose1d(
                    torch::nn::ConvTranspose1dOptions(deconv_in_, channels,
                                                      2 * stride)
                        .stride(stride)));
}

FeatureMap UpsampleBlockImpl::forward(const std::optional<FeatureMap> &h_cnn,
                                      const std::optional<FeatureMap> &t_next,
                                      std::int64_t target_frames) {
  TSE_CHECK(h_cnn || t_next, "upsample block called without inputs");
  const FeatureMap &ref = h_cnn ? *h_cnn : *t_next;
  TSE_CHECK(ref.stride % stride_ == 0, "input stride ", ref.stride,
            " is not divisible by the block stride ", stride_);

  torch::Tensor top;
  if (t_next) {
    if (h_cnn) {
      TSE_CHECK(t_next->stride == h_cnn->stride, "stride mismatch: CNN tap ",
                h_cnn->stride, " vs deeper feature ", t_next->stride);
      top = MatchFrames(t_next->data, h_cnn->frames(), "upsample input");
    } else {
      top = t_next->data;
    }
  }

  torch::Tensor x;
  if (!h_cnn) {
    x = top;
  } else if (fusion_ == AieFusion::kFpm) {
    x = Conv(lateral_, h_cnn->data);
    if (top.defined()) x = x + top;
  } else {
    x = top.defined() ? torch::cat({h_cnn->data, top}, 2) : h_cnn->data;
  }
  TSE_CHECK(x.size(2) == deconv_in_, "deconv expects ", deconv_in_,
            " channels, got ", x.size(2));

  auto y = deconv_->forward(x.transpose(1, 2)).transpose(1, 2);
  if (target_frames >= 0) y = MatchFrames(y, target_frames, "upsample output");
  return {y, ref.stride / stride_, ref.sample_rate};
}

AieImpl::AieImpl(AieConfig cfg, const BackboneConfig &backbone)
    : cfg_(cfg), num_levels_(backbone.num_conv_layers()), target_level_(0) {
  backbone.Validate();
  if (cfg_.channels <= 0) throw ConfigError("aie.channels must be positive");
  std::string available;
  for (int j = 1; j <= num_levels_; ++j) {
    if (backbone.CumulativeStride(j) == cfg_.target_stride) target_level_ = j;
    available += (j > 1 ? ", " : "") +
                 std::to_string(backbone.CumulativeStride(j));
  }
  if (target_level_ == 0)
    throw ConfigError(internal::Concat(
        "aie target stride ", cfg_.target_stride,
        " matches no CNN level; available cumulative strides: ", available));

  const std::int64_t cnn_ch = backbone.conv_layers[0].channels;
  const std::int64_t ch = cfg_.channels;
  if (UsesTransformer(cfg_.source)) {
    top_weights_ = register_module(
        "top_weights", LayerWeights(backbone.n_transformer_blocks + 1));
    top_proj_ =
        register_module("top_proj", torch::nn::Linear(backbone.model_dim, ch));
  }

  auto blocks = register_module("blocks", torch::nn::ModuleList());
  if (cfg_.source != AieSource::kSingleCnn) {
    const bool with_cnn = cfg_.source != AieSource::kTransformerOnly;
    for (int j = num_levels_; j > target_level_; --j) {
      bool has_top = j < num_levels_ || UsesTransformer(cfg_.source);
      UpsampleBlock b(cfg_.fusion, with_cnn ? cnn_ch : 0, has_top ? ch : 0, ch,
                      backbone.conv_layers[j - 1].stride);
      blocks->push_back(b);
      blocks_.push_back(b);
    }
  }

  if (cfg_.source != AieSource::kTransformerOnly) {
    const bool has_top =
        target_level_ < num_levels_ || UsesTransformer(cfg_.source);
    std::int64_t in = cnn_ch;
    if (cfg_.source != AieSource::kSingleCnn && cfg_.fusion == AieFusion::kUnet &&
        has_top)
      in += ch;
    output_fusion_ = register_module(
        "output_fusion",
        torch::nn::Conv1d(torch::nn::Conv1dOptions(in, ch, 1)));
  }
}

FeatureMap AieImpl::InitTop(const std::vector<FeatureMap> &trf_taps) {
  if (!UsesTransformer(cfg_.source))
    throw ConfigError(
        "aie source does not use Transformer taps; the top level is the "
        "deepest CNN tap");
  TSE_CHECK(static_cast<std::int64_t>(trf_taps.size()) == top_weights_->size(),
            "expected ", top_weights_->size(), " Transformer taps, got ",
            trf_taps.size());
  FeatureMap mixed = WeightedSum(trf_taps, top_weights_);
  return {top_proj_->forward(mixed.data), mixed.stride, mixed.sample_rate};
}

FeatureMap AieImpl::forward(const LayerTaps &taps) {
  TSE_CHECK(static_cast<int>(taps.cnn.size()) == num_levels_, "expected ",
            num_levels_, " CNN taps, got ", taps.cnn.size());
  const FeatureMap &target_tap = taps.Cnn(target_level_);

  if (cfg_.source == AieSource::kSingleCnn) {
    return {Conv(output_fusion_, target_tap.data), target_tap.stride,
            target_tap.sample_rate};
  }

  std::optional<FeatureMap> t;
  if (UsesTransformer(cfg_.source)) {
    TSE_CHECK(!taps.trf.empty(), "aie source needs Transformer taps");
    t = InitTop(taps.trf);
  }
  const bool with_cnn = cfg_.source != AieSource::kTransformerOnly;
  int j = num_levels_;
  for (std::size_t k = 0; k < blocks_.size(); ++k, --j) {
    std::optional<FeatureMap> h;
    if (with_cnn) h = taps.Cnn(j);
    FeatureMap out = blocks_[k]->forward(h, t, taps.Cnn(j - 1).frames());
    const bool last = k + 1 == blocks_.size();
    if (cfg_.activation && (with_cnn || !last)) out.data = torch::gelu(out.data);
    t = out;
  }

  if (cfg_.source == AieSource::kTransformerOnly) {
    return {MatchFrames(t->data, target_tap.frames(), "aie output"),
            target_tap.stride, target_tap.sample_rate};
  }

  torch::Tensor h;
  if (!t) {
    h = Conv(output_fusion_, target_tap.data);
  } else {
    auto top = MatchFrames(t->data, target_tap.frames(), "aie output");
    if (cfg_.fusion == AieFusion::kFpm)
      h = Conv(output_fusion_, target_tap.data) + top;
    else
      h = Conv(output_fusion_, torch::cat({target_tap.data, top}, 2));
  }
  return {h, target_tap.stride, target_tap.sample_rate};
}

}  // namespace tse
