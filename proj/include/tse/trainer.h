// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Loss, batching, training loop and evaluation for both model families.

#ifndef TSE_TRAINER_H_
#define TSE_TRAINER_H_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "tse/config.h"
#include "tse/datasim.h"
#include "tse/metrics.h"
#include "tse/model.h"
#include "tse/report.h"

namespace tse {

// Per-item SI-SDR in dB, [B, L] x [B, L] -> [B], differentiable and
// dtype-generic. eps keeps silent inputs finite; no clamping.
torch::Tensor SiSdrTensor(const torch::Tensor &est, const torch::Tensor &ref,
                          double eps = 1e-8);
// -mean SI-SDR.
torch::Tensor SiSdrLoss(const torch::Tensor &est, const torch::Tensor &ref,
                        double eps = 1e-8);

struct Sample {
  std::string id;
  Waveform mixture;
  Waveform target;
  Waveform enrollment;
  std::string target_path;
};

// Reads every manifest row (mixture, target reference, enrollment).
std::vector<Sample> LoadSamples(const Manifest &manifest);
std::vector<Sample> LoadSamples(const std::string &manifest_csv);

struct Batch {
  std::vector<std::string> ids;
  torch::Tensor mixture;     // [B, L]
  torch::Tensor target;      // [B, L]
  torch::Tensor enrollment;  // [B, Le]
};

// Stacks the chosen samples; mixtures/targets are cut to the shortest
// mixture and enrollments to the shortest enrollment.
Batch Collate(const std::vector<Sample> &samples,
              const std::vector<std::size_t> &indices);

struct StepResult {
  double loss = 0.0;
  double grad_norm = 0.0;
};

struct FitResult {
  int steps = 0;
  int epochs = 0;
  double best_dev_si_sdri = -kMetricClampDb;
  double backbone_max_delta = 0.0;
  std::vector<double> losses;
};

class Trainer {
 public:
  // Restores weights from cfg.train.init_from when set and builds the
  // parameter groups: head params at lr_main (lr_finetune when fine-tuning
  // from a restored model), backbone params at lr_finetune unless frozen.
  Trainer(std::shared_ptr<TseModel> model, RunConfig cfg);

  StepResult Step(const Batch &batch);

  // Epoch loop over `train` (reshuffled per epoch from the seed). Writes
  // loss_log.csv, epochs.csv, last.ckpt, best.ckpt and train_summary.json to
  // out_dir. Dev SI-SDRi selects best.ckpt; without dev data the training
  // set is scored instead.
  FitResult Fit(const std::vector<Sample> &train,
                const std::vector<Sample> &dev, const std::string &out_dir,
                const std::function<void(int, const StepResult &)> &on_step =
                    nullptr);

  // Model, optimizer state and loop position.
  void Save(const std::string &path) const;
  void Resume(const std::string &path);

  // Largest absolute backbone parameter change since construction.
  double BackboneMaxDelta() const;

  int step() const { return step_; }
  int epoch() const { return epoch_; }
  double head_lr() const { return head_lr_; }
  double backbone_lr() const { return backbone_lr_; }  // 0 when frozen
  TseModel &model() { return *model_; }
  const RunConfig &config() const { return cfg_; }

 private:
  std::vector<torch::Tensor> GroupParams() const;

  std::shared_ptr<TseModel> model_;
  RunConfig cfg_;
  double head_lr_ = 0.0, backbone_lr_ = 0.0;
  std::unique_ptr<torch::optim::Adam> optimizer_;
  std::vector<torch::Tensor> backbone_snapshot_;
  int step_ = 0;
  int epoch_ = 0;         // completed epochs
  int batch_in_epoch_ = 0;  // batches done in the current epoch
  double best_dev_ = -kMetricClampDb;
};

enum class EvalMode {
  kModel,
  kOracle,       // estimate := reference
  kPassthrough,  // estimate := mixture
};

struct EvalOptions {
  EvalMode mode = EvalMode::kModel;
  int sdr_taps = kSdrFilterTaps;
  std::vector<ExternalMetric> external;  // "stoi" / "pesq"
  std::string estimate_dir;  // estimates written here when non-empty
};

// Scores every sample. `model` may be null for the debug modes.
EvalReport Evaluate(TseModel *model, const std::vector<Sample> &samples,
                    const EvalOptions &options);

}  // namespace tse

#endif  // TSE_TRAINER_H_
