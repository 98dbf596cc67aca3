// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "tse/model.h"

#include "tse/common.h"

namespace tse {

namespace {

bool IsBackboneName(const std::string &name) {
  const std::string prefix = std::string(kBackboneModuleName) + ".";
  return name.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace

std::vector<torch::Tensor> TseModel::BackboneParameters() const {
  std::vector<torch::Tensor> out;
  for (const auto &p : named_parameters(/*recurse=*/true))
    if (IsBackboneName(p.key())) out.push_back(p.value());
  return out;
}

std::vector<torch::Tensor> TseModel::HeadParameters() const {
  std::vector<torch::Tensor> out;
  for (const auto &p : named_parameters(/*recurse=*/true))
    if (!IsBackboneName(p.key())) out.push_back(p.value());
  return out;
}

std::vector<WeightRecord> TseModel::ExportLayerWeights() const {
  std::vector<WeightRecord> out;
  for (const auto &[label, w] : NamedLayerWeights())
    out.push_back(ExportWeights(w, label));
  return out;
}

void TseModel::SetBackboneFrozen(bool frozen) {
  backbone_frozen_ = frozen;
  if (backbone_) backbone_->SetTrainable(!frozen);
}

TdsbTse::TdsbTse(const RunConfig &rc) : cfg_(rc.tdsb) {
  const bool mhfa = rc.spk_encoder.type == SpeakerEncoderType::kMhfa;
  cfg_.fuse_ssl = rc.tdsb.fuse_ssl;
  cfg_.ssl_channels = rc.tdsb.fuse_ssl ? rc.aie.channels : 0;
  cfg_.embed_dim = mhfa ? rc.spk_encoder.mhfa.embed_dim
                        : rc.spk_encoder.tcn.embed_dim;
  cfg_.sample_rate = rc.data.sample_rate;

  encoder_ = register_module("encoder", TdsbEncoder(cfg_));
  extractor_ = register_module("extractor", TdsbExtractor(cfg_));
  decoder_ = register_module("decoder", TdsbDecoder(cfg_));

  const BackboneConfig bb = MakeBackboneConfig(rc);
  if (rc.NeedsBackbone())
    backbone_ = register_module(kBackboneModuleName, Backbone(bb));
  if (cfg_.fuse_ssl) aie_ = register_module("aie", Aie(rc.aie, bb));
  if (mhfa)
    mhfa_ = register_module(
        "mhfa", Mhfa(rc.spk_encoder.mhfa, bb.n_transformer_blocks + 1,
                     bb.model_dim));
  else
    tcn_spk_ = register_module("tcn_spk", TcnSpeakerEncoder(rc.spk_encoder.tcn));
  SetBackboneFrozen(true);
}

torch::Tensor TdsbTse::SpeakerEmbedding(const torch::Tensor &enrollment) {
  if (mhfa_) {
    auto taps = backbone_->ForwardFeatures(enrollment, backbone_mode());
    return mhfa_->forward(taps.trf);
  }
  return tcn_spk_->forward(enrollment);
}

FeatureMap TdsbTse::SslStream(const torch::Tensor &mixture) {
  TSE_CHECK(aie_, "SSL stream requested but tdsb.fuse_ssl is off");
  auto taps = backbone_->ForwardFeatures(
      mixture, backbone_mode(), UsesTransformer(aie_->config().source));
  return aie_->forward(taps);
}

torch::Tensor TdsbTse::Forward(const torch::Tensor &mixture,
                               const torch::Tensor &enrollment) {
  auto z_y = encoder_->forward(mixture);
  std::optional<FeatureMap> h;
  if (aie_) h = SslStream(mixture);
  auto e = SpeakerEmbedding(enrollment);
  auto z_s = extractor_->forward(z_y, h, e);
  return decoder_->forward(z_s, mixture.size(1));
}

std::vector<std::pair<std::string, LayerWeights>> TdsbTse::NamedLayerWeights()
    const {
  std::vector<std::pair<std::string, LayerWeights>> out;
  if (aie_ && aie_->top_weights()) out.emplace_back("aie_top", aie_->top_weights());
  if (mhfa_) {
    out.emplace_back("mhfa_keys", mhfa_->key_weights());
    out.emplace_back("mhfa_values", mhfa_->value_weights());
  }
  return out;
}

SuperbTse::SuperbTse(const RunConfig &rc) {
  const BackboneConfig bb = MakeBackboneConfig(rc);
  backbone_ = register_module(kBackboneModuleName, Backbone(bb));
  head_ = register_module(
      "head", SuperbHead(rc.superb, bb.n_transformer_blocks + 1, bb.model_dim));
  SetBackboneFrozen(true);
}

torch::Tensor SuperbTse::SpeakerEmbedding(const torch::Tensor &enrollment) {
  return head_->SpeakerEmbed(
      backbone_->ForwardFeatures(enrollment, backbone_mode()).trf);
}

torch::Tensor SuperbTse::Forward(const torch::Tensor &mixture,
                                 const torch::Tensor &enrollment) {
  auto e = SpeakerEmbedding(enrollment);
  auto taps = backbone_->ForwardFeatures(mixture, backbone_mode());
  return head_->Extract(mixture, taps.trf, e);
}

std::vector<std::pair<std::string, LayerWeights>>
SuperbTse::NamedLayerWeights() const {
  return {{"extractor", head_->ext_weights()}, {"spk", head_->spk_weights()}};
}

std::shared_ptr<TseModel> BuildModel(const RunConfig &cfg) {
  cfg.Validate();
  torch::manual_seed(cfg.train.seed);
  std::shared_ptr<TseModel> model;
  if (cfg.model == ModelType::kSuperb)
    model = std::make_shared<SuperbTse>(cfg);
  else
    model = std::make_shared<TdsbTse>(cfg);
  if (!cfg.backbone.checkpoint.empty()) {
    if (!model->backbone())
      throw ConfigError(
          "backbone.checkpoint is set but the model has no SSL backbone");
    std::map<std::string, std::string> name_map;
    if (!cfg.backbone.name_map.empty())
      name_map = ReadNameMap(cfg.backbone.name_map);
    auto report = model->backbone()->ImportCheckpoint(
        TensorArchive::Load(cfg.backbone.checkpoint), name_map,
        cfg.backbone.source_prefix);
    TSE_LOG_INFO("imported ", report.assigned.size(),
                 " backbone tensors from ", cfg.backbone.checkpoint, " (",
                 report.unmatched.size(), " unused)");
  }
  model->SetBackboneFrozen(cfg.train.freeze_backbone);
  return model;
}

TensorArchive ExportModel(const TseModel &model, const RunConfig &cfg) {
  TensorArchive ar;
  ar.metadata["kind"] = "tse_model";
  ar.metadata["config"] = cfg.ToYaml();
  ar.metadata["config_hash"] = cfg.Hash();
  AddModuleToArchive(model, "model.", &ar);
  return ar;
}

void LoadModel(TseModel &model, const TensorArchive &archive) {
  auto kind = archive.metadata.find("kind");
  if (kind == archive.metadata.end() || kind->second != "tse_model")
    throw DataError("archive is not a model checkpoint");
  LoadModuleFromArchive(model, archive, "model.");
}

LoadedModel LoadModelCheckpoint(const std::string &path) {
  const TensorArchive ar = TensorArchive::Load(path);
  auto it = ar.metadata.find("config");
  if (it == ar.metadata.end())
    throw DataError(path + " carries no configuration");
  LoadedModel out;
  out.config = ConfigFromYamlString(it->second);
  RunConfig build = out.config;
  build.backbone.checkpoint.clear();
  build.train.init_from.clear();
  out.model = BuildModel(build);
  LoadModel(*out.model, ar);
  return out;
}

}  // namespace tse
