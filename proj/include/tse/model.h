// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Complete extraction systems assembled from a RunConfig.

#ifndef TSE_MODEL_H_
#define TSE_MODEL_H_

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "tse/aggregation.h"
#include "tse/aie.h"
#include "tse/backbone.h"
#include "tse/config.h"
#include "tse/spk_encoder.h"
#include "tse/superb.h"
#include "tse/tdsb.h"

namespace tse {

// The SSL backbone, when present, is registered under this name.
inline constexpr char kBackboneModuleName[] = "ssl";

class TseModel : public torch::nn::Module {
 public:
  // mixture [B, L], enrollment [B, Le] -> estimate [B, L].
  virtual torch::Tensor Forward(const torch::Tensor &mixture,
                                const torch::Tensor &enrollment) = 0;

  // Null when the configuration uses no SSL backbone.
  Backbone backbone() const { return backbone_; }

  std::vector<torch::Tensor> BackboneParameters() const;
  std::vector<torch::Tensor> HeadParameters() const;

  // Labelled layer-weight sets present in this model.
  virtual std::vector<std::pair<std::string, LayerWeights>> NamedLayerWeights()
      const = 0;
  std::vector<WeightRecord> ExportLayerWeights() const;

  // Frozen: backbone parameters stop requiring gradients and the backbone
  // runs without autograd.
  void SetBackboneFrozen(bool frozen);
  bool backbone_frozen() const { return backbone_frozen_; }

 protected:
  BackboneMode backbone_mode() const {
    return backbone_frozen_ ? BackboneMode::kFrozen : BackboneMode::kTrainable;
  }
  Backbone backbone_{nullptr};
  bool backbone_frozen_ = true;
};

class TdsbTse : public TseModel {
 public:
  TdsbTse(const RunConfig &cfg);

  torch::Tensor Forward(const torch::Tensor &mixture,
                        const torch::Tensor &enrollment) override;
  std::vector<std::pair<std::string, LayerWeights>> NamedLayerWeights()
      const override;

  torch::Tensor SpeakerEmbedding(const torch::Tensor &enrollment);
  // AIE output for the mixture; requires fuse_ssl.
  FeatureMap SslStream(const torch::Tensor &mixture);

  const TdsbConfig &config() const { return cfg_; }
  TdsbEncoder encoder() const { return encoder_; }
  TdsbExtractor extractor() const { return extractor_; }
  TdsbDecoder decoder() const { return decoder_; }
  Aie aie() const { return aie_; }
  Mhfa mhfa() const { return mhfa_; }

 private:
  TdsbConfig cfg_;
  TdsbEncoder encoder_{nullptr};
  TdsbExtractor extractor_{nullptr};
  TdsbDecoder decoder_{nullptr};
  Aie aie_{nullptr};
  Mhfa mhfa_{nullptr};
  TcnSpeakerEncoder tcn_spk_{nullptr};
};

class SuperbTse : public TseModel {
 public:
  explicit SuperbTse(const RunConfig &cfg);

  torch::Tensor Forward(const torch::Tensor &mixture,
                        const torch::Tensor &enrollment) override;
  std::vector<std::pair<std::string, LayerWeights>> NamedLayerWeights()
      const override;

  torch::Tensor SpeakerEmbedding(const torch::Tensor &enrollment);
  SuperbHead head() const { return head_; }

 private:
  SuperbHead head_{nullptr};
};

// Seeds torch with cfg.train.seed, builds the model and, when
// backbone.checkpoint is set, imports the pretrained backbone.
std::shared_ptr<TseModel> BuildModel(const RunConfig &cfg);

// Model weights under "model." plus run metadata.
TensorArchive ExportModel(const TseModel &model, const RunConfig &cfg);
void LoadModel(TseModel &model, const TensorArchive &archive);

struct LoadedModel {
  std::shared_ptr<TseModel> model;
  RunConfig config;  // as stored in the checkpoint
};

// Rebuilds the model from the configuration embedded in a checkpoint and
// loads its weights.
LoadedModel LoadModelCheckpoint(const std::string &path);

}  // namespace tse

#endif  // TSE_MODEL_H_
