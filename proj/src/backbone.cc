// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "tse/backbone.h"

#include <cmath>
#include <set>

#include "tse/common.h"

namespace tse {

namespace {

const std::vector<std::int64_t> kKernels = {10, 3, 3, 3, 3, 2, 2};
const std::vector<std::int64_t> kStrides = {5, 2, 2, 2, 2, 2, 2};

std::vector<ConvLayerSpec> StandardConvStack(std::int64_t channels) {
  std::vector<ConvLayerSpec> out;
  for (std::size_t i = 0; i < kKernels.size(); ++i)
    out.push_back({kKernels[i], kStrides[i], channels});
  return out;
}

std::vector<std::int64_t> Sizes(const torch::Tensor &t) {
  return std::vector<std::int64_t>(t.sizes().begin(), t.sizes().end());
}

}  // namespace

BackboneConfig BackboneConfig::Tiny() {
  BackboneConfig c;
  c.conv_layers = StandardConvStack(64);
  c.n_transformer_blocks = 4;
  c.model_dim = 128;
  c.n_heads = 2;
  c.ff_dim = 256;
  c.positions = PositionScheme::kAbsolute;
  return c;
}

BackboneConfig BackboneConfig::BaseCompatible() {
  BackboneConfig c;
  c.conv_layers = StandardConvStack(512);
  c.n_transformer_blocks = 12;
  c.model_dim = 768;
  c.n_heads = 12;
  c.ff_dim = 3072;
  c.positions = PositionScheme::kConv;
  return c;
}

std::int64_t BackboneConfig::CumulativeStride(int j) const {
  if (j < 1 || j > num_conv_layers())
    throw ConfigError(internal::Concat("CNN level ", j, " out of range 1..",
                                       num_conv_layers()));
  std::int64_t s = 1;
  for (int i = 0; i < j; ++i) s *= conv_layers[i].stride;
  return s;
}

void BackboneConfig::Validate() const {
  if (num_conv_layers() < 2)
    throw ConfigError("backbone needs at least 2 CNN layers");
  if (n_transformer_blocks < 1)
    throw ConfigError("backbone needs at least 1 Transformer block");
  for (int j = 0; j < num_conv_layers(); ++j) {
    const auto &l = conv_layers[j];
    if (l.stride < 1 || l.kernel < l.stride || l.channels < 1)
      throw ConfigError(internal::Concat("conv layer ", j + 1,
                                         ": need kernel >= stride >= 1 and "
                                         "channels >= 1"));
    if (j > 0 && l.stride < 2)
      throw ConfigError(internal::Concat(
          "conv layer ", j + 1,
          ": cumulative stride must strictly increase (stride >= 2)"));
    if (l.channels != conv_layers[0].channels)
      throw ConfigError("all CNN layers must share one channel width");
  }
  if (model_dim % n_heads != 0)
    throw ConfigError("model_dim must be divisible by n_heads");
  if (positions == PositionScheme::kConv && model_dim % pos_conv_groups != 0)
    throw ConfigError("model_dim must be divisible by pos_conv_groups");
}

std::int64_t ReceptiveField(const BackboneConfig &cfg, int j) {
  cfg.CumulativeStride(j);  // range check
  std::int64_t r = 1;
  for (int i = j - 1; i >= 0; --i)
    r = (r - 1) * cfg.conv_layers[i].stride + cfg.conv_layers[i].kernel;
  return r;
}

std::int64_t FrameCount(const BackboneConfig &cfg, std::int64_t length, int j) {
  std::int64_t rf = ReceptiveField(cfg, j);
  if (length < rf)
    throw DataError(internal::Concat("input of ", length,
                                     " samples is shorter than the receptive "
                                     "field of CNN level ", j, " (", rf,
                                     " samples)"));
  std::int64_t frames = length;
  for (int i = 0; i < j; ++i)
    frames = (frames - cfg.conv_layers[i].kernel) / cfg.conv_layers[i].stride + 1;
  return frames;
}

ConvLayerImpl::ConvLayerImpl(std::int64_t in, const ConvLayerSpec &spec,
                             bool group_norm) {
  conv_ = register_module(
      "conv", torch::nn::Conv1d(torch::nn::Conv1dOptions(in, spec.channels,
                                                         spec.kernel)
                                    .stride(spec.stride)
                                    .bias(false)));
  torch::nn::init::kaiming_normal_(conv_->weight);
  if (group_norm) {
    layer_norm_ = register_module(
        "layer_norm",
        torch::nn::GroupNorm(
            torch::nn::GroupNormOptions(spec.channels, spec.channels)));
  }
}

torch::Tensor ConvLayerImpl::forward(const torch::Tensor &x) {
  auto y = conv_->forward(x);
  if (layer_norm_) y = layer_norm_->forward(y);
  return torch::gelu(y);
}

FeatureProjectionImpl::FeatureProjectionImpl(std::int64_t in,
                                             std::int64_t out) {
  layer_norm_ = register_module(
      "layer_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({in})));
  projection_ = register_module("projection", torch::nn::Linear(in, out));
}

torch::Tensor FeatureProjectionImpl::forward(const torch::Tensor &x) {
  return projection_->forward(layer_norm_->forward(x));
}

PosConvEmbeddingImpl::PosConvEmbeddingImpl(std::int64_t dim,
                                           std::int64_t kernel,
                                           std::int64_t groups)
    : kernel_(kernel), groups_(groups) {
  auto conv = register_module("conv", std::make_shared<torch::nn::Module>());
  auto v = torch::randn({dim, dim / groups, kernel}) *
           std::sqrt(4.0 / static_cast<double>(kernel * dim));
  auto g = v.pow(2).sum({0, 1}, true).sqrt();
  weight_g_ = conv->register_parameter("weight_g", g);
  weight_v_ = conv->register_parameter("weight_v", v);
  bias_ = conv->register_parameter("bias", torch::zeros({dim}));
}

torch::Tensor PosConvEmbeddingImpl::forward(const torch::Tensor &x) {
  auto weight =
      weight_g_ * weight_v_ / weight_v_.pow(2).sum({0, 1}, true).sqrt();
  auto y = torch::conv1d(x.transpose(1, 2), weight, bias_, 1, kernel_ / 2, 1,
                         groups_);
  // An even kernel with padding k/2 yields one extra trailing frame.
  if (kernel_ % 2 == 0) y = y.narrow(2, 0, x.size(1));
  return torch::gelu(y).transpose(1, 2);
}

SelfAttentionImpl::SelfAttentionImpl(std::int64_t dim, int heads)
    : heads_(heads) {
  q_proj_ = register_module("q_proj", torch::nn::Linear(dim, dim));
  k_proj_ = register_module("k_proj", torch::nn::Linear(dim, dim));
  v_proj_ = register_module("v_proj", torch::nn::Linear(dim, dim));
  out_proj_ = register_module("out_proj", torch::nn::Linear(dim, dim));
}

torch::Tensor SelfAttentionImpl::forward(const torch::Tensor &x) {
  const auto b = x.size(0), t = x.size(1), d = x.size(2);
  const auto hd = d / heads_;
  auto split = [&](const torch::Tensor &y) {
    return y.view({b, t, heads_, hd}).transpose(1, 2);  // [B, H, T, hd]
  };
  auto q = split(q_proj_->forward(x)) / std::sqrt(static_cast<double>(hd));
  auto k = split(k_proj_->forward(x));
  auto v = split(v_proj_->forward(x));
  auto attn = torch::softmax(torch::matmul(q, k.transpose(-2, -1)), -1);
  auto ctx = torch::matmul(attn, v).transpose(1, 2).reshape({b, t, d});
  return out_proj_->forward(ctx);
}

TransformerLayerImpl::TransformerLayerImpl(std::int64_t dim, int heads,
                                           std::int64_t ff_dim) {
  attention_ = register_module("attention", SelfAttention(dim, heads));
  layer_norm_ = register_module(
      "layer_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  auto ff = register_module("feed_forward",
                            std::make_shared<torch::nn::Module>());
  intermediate_dense_ = ff->register_module("intermediate_dense",
                                            torch::nn::Linear(dim, ff_dim));
  output_dense_ =
      ff->register_module("output_dense", torch::nn::Linear(ff_dim, dim));
  final_layer_norm_ = register_module(
      "final_layer_norm",
      torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
}

torch::Tensor TransformerLayerImpl::forward(const torch::Tensor &x) {
  auto h = layer_norm_->forward(x + attention_->forward(x));
  auto ff = output_dense_->forward(
      torch::gelu(intermediate_dense_->forward(h)));
  return final_layer_norm_->forward(h + ff);
}

BackboneImpl::BackboneImpl(BackboneConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.Validate();
  auto fe = register_module("feature_extractor",
                            std::make_shared<torch::nn::Module>());
  conv_layers_ = fe->register_module("conv_layers", torch::nn::ModuleList());
  std::int64_t in = 1;
  for (int j = 0; j < cfg_.num_conv_layers(); ++j) {
    conv_layers_->push_back(ConvLayer(in, cfg_.conv_layers[j], j == 0));
    in = cfg_.conv_layers[j].channels;
  }
  feature_projection_ = register_module("feature_projection",
                                        FeatureProjection(in, cfg_.model_dim));

  auto enc = register_module("encoder", std::make_shared<torch::nn::Module>());
  if (cfg_.positions == PositionScheme::kConv) {
    pos_conv_embed_ = enc->register_module(
        "pos_conv_embed",
        PosConvEmbedding(cfg_.model_dim, cfg_.pos_conv_kernel,
                         cfg_.pos_conv_groups));
  } else {
    pos_embed_ = enc->register_parameter(
        "pos_embed",
        torch::randn({cfg_.max_positions, cfg_.model_dim}) * 0.02);
  }
  encoder_layer_norm_ = enc->register_module(
      "layer_norm",
      torch::nn::LayerNorm(torch::nn::LayerNormOptions({cfg_.model_dim})));
  layers_ = enc->register_module("layers", torch::nn::ModuleList());
  for (int i = 0; i < cfg_.n_transformer_blocks; ++i)
    layers_->push_back(
        TransformerLayer(cfg_.model_dim, cfg_.n_heads, cfg_.ff_dim));
}

LayerTaps BackboneImpl::ForwardFeatures(const torch::Tensor &wave,
                                        BackboneMode mode,
                                        bool run_transformer) {
  TSE_CHECK(wave.dim() == 2, "backbone expects [B, L] input, got ",
            wave.sizes());
  // Length check up front so the error names the minimum length.
  FrameCount(cfg_, wave.size(1), cfg_.num_conv_layers());
  if (mode == BackboneMode::kFrozen) {
    torch::NoGradGuard no_grad;
    return Run(wave, run_transformer);
  }
  return Run(wave, run_transformer);
}

LayerTaps BackboneImpl::Run(const torch::Tensor &wave, bool run_transformer) {
  LayerTaps taps;
  auto x = wave.unsqueeze(1);
  for (int j = 0; j < cfg_.num_conv_layers(); ++j) {
    x = conv_layers_[j]->as<ConvLayer>()->forward(x);
    taps.cnn.push_back(
        {x.transpose(1, 2), cfg_.CumulativeStride(j + 1), cfg_.sample_rate});
  }
  if (!run_transformer) return taps;

  const std::int64_t top_stride = cfg_.CumulativeStride(cfg_.num_conv_layers());
  auto h = feature_projection_->forward(taps.cnn.back().data);
  if (pos_conv_embed_) {
    h = h + pos_conv_embed_->forward(h);
  } else {
    TSE_CHECK(h.size(1) <= cfg_.max_positions, "input yields ", h.size(1),
              " frames but the absolute position table holds ",
              cfg_.max_positions);
    h = h + pos_embed_.narrow(0, 0, h.size(1)).unsqueeze(0);
  }
  h = encoder_layer_norm_->forward(h);
  taps.trf.push_back({h, top_stride, cfg_.sample_rate});
  for (int i = 0; i < cfg_.n_transformer_blocks; ++i) {
    if (block_input_hook_) block_input_hook_(i, h);
    h = layers_[i]->as<TransformerLayer>()->forward(h);
    taps.trf.push_back({h, top_stride, cfg_.sample_rate});
  }
  return taps;
}

void BackboneImpl::SetTrainable(bool trainable) {
  for (auto &p : parameters(true)) p.set_requires_grad(trainable);
}

TensorArchive BackboneImpl::ExportCheckpoint() const {
  TensorArchive a;
  a.metadata["kind"] = "backbone";
  AddModuleToArchive(*this, "", &a);
  return a;
}

BackboneImportReport BackboneImpl::ImportCheckpoint(
    const TensorArchive &archive,
    const std::map<std::string, std::string> &name_map,
    const std::string &source_prefix) {
  torch::NoGradGuard no_grad;
  auto params = named_parameters(true);
  auto buffers = named_buffers(true);
  auto find = [&](const std::string &name) -> torch::Tensor * {
    if (auto *p = params.find(name)) return p;
    if (auto *b = buffers.find(name)) return b;
    return nullptr;
  };

  BackboneImportReport report;
  std::set<std::string> assigned;
  for (const auto &[raw_name, tensor] : archive.tensors) {
    std::string name = raw_name;
    if (!source_prefix.empty()) {
      if (name.rfind(source_prefix, 0) != 0) {
        report.unmatched.push_back(raw_name);
        continue;
      }
      name = name.substr(source_prefix.size());
    }
    if (auto it = name_map.find(name); it != name_map.end()) name = it->second;
    torch::Tensor *dst = find(name);
    if (!dst) {
      report.unmatched.push_back(raw_name);
      continue;
    }
    if (tensor.shape != Sizes(*dst))
      throw DataError("shape mismatch importing " + raw_name + " -> " + name +
                      ": checkpoint " + ShapeString(tensor.shape) +
                      " vs backbone " + ShapeString(Sizes(*dst)));
    if (!assigned.insert(name).second)
      throw DataError("backbone tensor " + name + " assigned twice (from " +
                      raw_name + ")");
    dst->copy_(FromArchiveTensor(tensor));
    report.assigned.push_back(name);
  }

  std::vector<std::string> missing;
  for (const auto &p : params)
    if (!assigned.count(p.key())) missing.push_back(p.key());
  for (const auto &b : buffers)
    if (!assigned.count(b.key())) missing.push_back(b.key());
  if (!missing.empty()) {
    std::string msg = "checkpoint leaves backbone tensors unassigned:";
    for (const auto &m : missing) msg += " " + m;
    if (!report.unmatched.empty()) {
      msg += "; unmatched checkpoint tensors:";
      for (const auto &u : report.unmatched) msg += " " + u;
    }
    throw DataError(msg);
  }
  return report;
}

}  // namespace tse
