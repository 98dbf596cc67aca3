// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "tse/trainer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "tse/common.h"
#include "tse/feature_map.h"
#include "tse/metrics.h"

namespace fs = std::filesystem;

namespace tse {

torch::Tensor SiSdrTensor(const torch::Tensor &est, const torch::Tensor &ref,
                          double eps) {
  TSE_CHECK(est.sizes() == ref.sizes(), "SI-SDR needs equal shapes, got ",
            est.sizes(), " and ", ref.sizes());
  auto alpha = (est * ref).sum(-1, true) / (ref.pow(2).sum(-1, true) + eps);
  auto target = alpha * ref;
  auto noise = est - target;
  return 10.0 * torch::log10((target.pow(2).sum(-1) + eps) /
                             (noise.pow(2).sum(-1) + eps));
}

torch::Tensor SiSdrLoss(const torch::Tensor &est, const torch::Tensor &ref,
                        double eps) {
  return -SiSdrTensor(est, ref, eps).mean();
}

std::vector<Sample> LoadSamples(const Manifest &manifest) {
  if (manifest.rows.empty()) throw DataError("manifest has no rows");
  std::vector<Sample> out;
  out.reserve(manifest.rows.size());
  for (const auto &row : manifest.rows) {
    Sample s;
    s.id = row.id;
    s.mixture = ReadWav(manifest.Resolve(row.mixture_path));
    s.target_path = manifest.Resolve(row.TargetSource());
    s.target = ReadWav(s.target_path);
    s.enrollment = ReadWav(manifest.Resolve(row.enrollment_path));
    if (s.mixture.size() != s.target.size())
      throw DataError(internal::Concat("row ", row.id, ": mixture has ",
                                       s.mixture.size(), " samples, target ",
                                       s.target.size()));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> LoadSamples(const std::string &manifest_csv) {
  return LoadSamples(ReadManifestCsv(manifest_csv));
}

Batch Collate(const std::vector<Sample> &samples,
              const std::vector<std::size_t> &indices) {
  TSE_CHECK(!indices.empty(), "empty batch");
  std::size_t len = std::numeric_limits<std::size_t>::max();
  std::size_t enroll_len = len;
  for (auto i : indices) {
    len = std::min(len, samples.at(i).mixture.size());
    enroll_len = std::min(enroll_len, samples.at(i).enrollment.size());
  }
  const auto n = static_cast<std::int64_t>(indices.size());
  Batch b;
  b.mixture = torch::empty({n, static_cast<std::int64_t>(len)});
  b.target = torch::empty_like(b.mixture);
  b.enrollment = torch::empty({n, static_cast<std::int64_t>(enroll_len)});
  for (std::int64_t k = 0; k < n; ++k) {
    const auto &s = samples[indices[k]];
    b.ids.push_back(s.id);
    std::copy_n(s.mixture.samples.data(), len, b.mixture[k].data_ptr<float>());
    std::copy_n(s.target.samples.data(), len, b.target[k].data_ptr<float>());
    std::copy_n(s.enrollment.samples.data(), enroll_len,
                b.enrollment[k].data_ptr<float>());
  }
  return b;
}

Trainer::Trainer(std::shared_ptr<TseModel> model, RunConfig cfg)
    : model_(std::move(model)), cfg_(std::move(cfg)) {
  cfg_.Validate();
  const auto &t = cfg_.train;
  if (!t.init_from.empty()) {
    LoadModel(*model_, TensorArchive::Load(t.init_from));
    TSE_LOG_INFO("restored model weights from ", t.init_from);
  }
  const bool frozen = t.freeze_backbone || !model_->backbone();
  model_->SetBackboneFrozen(t.freeze_backbone);
  head_lr_ = (!frozen && !t.init_from.empty()) ? t.lr_finetune : t.lr_main;
  backbone_lr_ = frozen ? 0.0 : t.lr_finetune;

  std::vector<torch::optim::OptimizerParamGroup> groups;
  groups.emplace_back(model_->HeadParameters(),
                      std::make_unique<torch::optim::AdamOptions>(head_lr_));
  if (!frozen)
    groups.emplace_back(
        model_->BackboneParameters(),
        std::make_unique<torch::optim::AdamOptions>(backbone_lr_));
  optimizer_ = std::make_unique<torch::optim::Adam>(
      std::move(groups), torch::optim::AdamOptions(head_lr_));

  for (const auto &p : model_->BackboneParameters())
    backbone_snapshot_.push_back(p.detach().clone());
}

std::vector<torch::Tensor> Trainer::GroupParams() const {
  std::vector<torch::Tensor> out;
  for (const auto &g : optimizer_->param_groups())
    for (const auto &p : g.params()) out.push_back(p);
  return out;
}

StepResult Trainer::Step(const Batch &batch) {
  model_->train();
  optimizer_->zero_grad();
  auto est = model_->Forward(batch.mixture, batch.enrollment);
  auto loss = SiSdrLoss(est, batch.target);
  const double loss_value = loss.item<double>();
  loss.backward();

  const auto params = GroupParams();
  const double max_norm = cfg_.train.clip_norm > 0
                              ? cfg_.train.clip_norm
                              : std::numeric_limits<double>::infinity();
  const double grad_norm =
      torch::nn::utils::clip_grad_norm_(params, max_norm);
  if (!std::isfinite(loss_value) || !std::isfinite(grad_norm)) {
    std::string norms;
    for (std::size_t g = 0; g < optimizer_->param_groups().size(); ++g) {
      double sq = 0.0;
      for (const auto &p : optimizer_->param_groups()[g].params())
        if (p.grad().defined()) sq += p.grad().pow(2).sum().item<double>();
      norms += internal::Concat(g ? ", " : "", "group ", g, " (lr ",
                                optimizer_->param_groups()[g].options().get_lr(),
                                "): ", std::sqrt(sq));
    }
    throw NumericError(internal::Concat("non-finite training state at step ",
                                        step_ + 1, ": loss ", loss_value,
                                        ", grad norm ", grad_norm, "; ", norms));
  }
  optimizer_->step();
  if (model_->backbone_frozen())
    for (auto &p : model_->BackboneParameters())
      if (p.grad().defined()) p.mutable_grad().reset();
  ++step_;
  return {loss_value, grad_norm};
}

double Trainer::BackboneMaxDelta() const {
  double delta = 0.0;
  const auto params = model_->BackboneParameters();
  for (std::size_t i = 0; i < params.size(); ++i)
    delta = std::max(
        delta,
        (params[i].detach() - backbone_snapshot_[i]).abs().max().item<double>());
  return delta;
}

void Trainer::Save(const std::string &path) const {
  TensorArchive ar = ExportModel(*model_, cfg_);
  ar.metadata["step"] = std::to_string(step_);
  ar.metadata["epoch"] = std::to_string(epoch_);
  ar.metadata["batch_in_epoch"] = std::to_string(batch_in_epoch_);
  ar.metadata["best_dev_si_sdri"] = std::to_string(best_dev_);
  const auto &state = optimizer_->state();
  const auto &groups = optimizer_->param_groups();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto &params = groups[g].params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto it = state.find(params[i].unsafeGetTensorImpl());
      if (it == state.end()) continue;
      const auto &s = static_cast<const torch::optim::AdamParamState &>(
          *it->second);
      const auto key = internal::Concat("optim.", g, ".", i, ".");
      ar.metadata[key + "step"] = std::to_string(s.step());
      ar.tensors[key + "exp_avg"] = ToArchiveTensor(s.exp_avg());
      ar.tensors[key + "exp_avg_sq"] = ToArchiveTensor(s.exp_avg_sq());
    }
  }
  ar.Save(path);
}

void Trainer::Resume(const std::string &path) {
  const TensorArchive ar = TensorArchive::Load(path);
  LoadModel(*model_, ar);
  auto meta = [&](const std::string &key) -> std::string {
    auto it = ar.metadata.find(key);
    if (it == ar.metadata.end())
      throw DataError(internal::Concat(path, ": missing '", key, "'"));
    return it->second;
  };
  step_ = std::stoi(meta("step"));
  epoch_ = std::stoi(meta("epoch"));
  batch_in_epoch_ = std::stoi(meta("batch_in_epoch"));
  best_dev_ = std::stod(meta("best_dev_si_sdri"));

  auto &state = optimizer_->state();
  state.clear();
  const auto &groups = optimizer_->param_groups();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto &params = groups[g].params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto key = internal::Concat("optim.", g, ".", i, ".");
      auto it = ar.metadata.find(key + "step");
      if (it == ar.metadata.end()) continue;
      auto s = std::make_unique<torch::optim::AdamParamState>();
      s->step(std::stoll(it->second));
      s->exp_avg(FromArchiveTensor(ar.tensors.at(key + "exp_avg")));
      s->exp_avg_sq(FromArchiveTensor(ar.tensors.at(key + "exp_avg_sq")));
      TSE_CHECK(s->exp_avg().sizes() == params[i].sizes(),
                "optimizer state shape mismatch for ", key);
      state[params[i].unsafeGetTensorImpl()] = std::move(s);
    }
  }
  backbone_snapshot_.clear();
  for (const auto &p : model_->BackboneParameters())
    backbone_snapshot_.push_back(p.detach().clone());
}

FitResult Trainer::Fit(const std::vector<Sample> &train,
                       const std::vector<Sample> &dev,
                       const std::string &out_dir,
                       const std::function<void(int, const StepResult &)>
                           &on_step) {
  if (train.empty()) throw DataError("training set is empty");
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  const bool fresh = step_ == 0;
  std::ofstream loss_log(dir / "loss_log.csv",
                         fresh ? std::ios::trunc : std::ios::app);
  std::ofstream epoch_log(dir / "epochs.csv",
                          fresh ? std::ios::trunc : std::ios::app);
  if (!loss_log || !epoch_log)
    throw DataError("cannot write logs under " + out_dir);
  if (fresh) {
    loss_log << "step,epoch,loss,grad_norm\n";
    epoch_log << "epoch,step,train_loss,dev_si_sdri,backbone_max_delta\n";
  }
  loss_log.precision(9);
  epoch_log.precision(9);

  const auto &t = cfg_.train;
  const std::size_t bs = static_cast<std::size_t>(t.batch_size);
  const std::size_t n_batches = (train.size() + bs - 1) / bs;
  const auto &score_set = dev.empty() ? train : dev;
  auto step_limit = [&] { return t.max_steps > 0 && step_ >= t.max_steps; };

  FitResult result;
  int last_eval_step = -1;
  double loss_sum = 0.0;
  int loss_count = 0;
  bool saved_best = fs::exists(dir / "best.ckpt") && !fresh;

  auto evaluate = [&] {
    EvalOptions opt;
    opt.sdr_taps = 0;
    const double dev_score = Evaluate(model_.get(), score_set, opt).mean_si_sdri;
    const double delta = BackboneMaxDelta();
    epoch_log << epoch_ << "," << step_ << ","
              << (loss_count ? loss_sum / loss_count : 0.0) << "," << dev_score
              << "," << delta << "\n";
    epoch_log.flush();
    TSE_LOG_INFO("epoch ", epoch_, " step ", step_, " dev SI-SDRi ", dev_score,
                 " dB");
    loss_sum = 0.0;
    loss_count = 0;
    last_eval_step = step_;
    if (!saved_best || dev_score > best_dev_) {
      best_dev_ = dev_score;
      Save((dir / "best.ckpt").string());
      saved_best = true;
    }
    Save((dir / "last.ckpt").string());
  };

  while (epoch_ < t.max_epochs && !step_limit()) {
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(t.seed * 0x9E3779B97F4A7C15ULL + epoch_ + 1);
    std::shuffle(order.begin(), order.end(), rng);

    for (std::size_t b = batch_in_epoch_; b < n_batches && !step_limit(); ++b) {
      std::vector<std::size_t> idx(
          order.begin() + b * bs,
          order.begin() + std::min(train.size(), (b + 1) * bs));
      const StepResult r = Step(Collate(train, idx));
      batch_in_epoch_ = static_cast<int>(b + 1);
      result.losses.push_back(r.loss);
      loss_sum += r.loss;
      ++loss_count;
      loss_log << step_ << "," << epoch_ + 1 << "," << r.loss << ","
               << r.grad_norm << "\n";
      if (t.log_every > 0 && step_ % t.log_every == 0) {
        loss_log.flush();
        TSE_LOG_INFO("step ", step_, " loss ", r.loss);
      }
      if (on_step) on_step(step_, r);
    }
    if (static_cast<std::size_t>(batch_in_epoch_) < n_batches) break;
    ++epoch_;
    batch_in_epoch_ = 0;
    if (epoch_ % t.eval_every == 0) evaluate();
  }
  if (last_eval_step != step_) evaluate();

  result.steps = step_;
  result.epochs = epoch_;
  result.best_dev_si_sdri = best_dev_;
  result.backbone_max_delta = BackboneMaxDelta();

  nlohmann::ordered_json summary{
      {"config_hash", cfg_.Hash()},
      {"steps", step_},
      {"epochs", epoch_},
      {"best_dev_si_sdri", best_dev_},
      {"backbone_frozen", model_->backbone_frozen()},
      {"backbone_max_delta", result.backbone_max_delta},
      {"head_lr", head_lr_},
      {"backbone_lr", backbone_lr_}};
  std::ofstream(dir / "train_summary.json") << summary.dump(2) << "\n";
  return result;
}

EvalReport Evaluate(TseModel *model, const std::vector<Sample> &samples,
                    const EvalOptions &options) {
  if (samples.empty()) throw DataError("nothing to evaluate");
  if (options.mode == EvalMode::kModel && !model)
    throw ConfigError("evaluation needs a model outside the debug modes");
  std::string est_dir = options.estimate_dir;
  if (est_dir.empty() && !options.external.empty())
    est_dir = (fs::temp_directory_path() /
               ("tse_eval_" + std::to_string(::getpid())))
                  .string();
  if (!est_dir.empty()) fs::create_directories(est_dir);

  torch::NoGradGuard no_grad;
  if (model) model->eval();
  EvalReport report;
  for (const auto &s : samples) {
    std::vector<float> est;
    switch (options.mode) {
      case EvalMode::kOracle:
        est = s.target.samples;
        break;
      case EvalMode::kPassthrough:
        est = s.mixture.samples;
        break;
      case EvalMode::kModel: {
        auto y = model->Forward(WaveToTensor(s.mixture).unsqueeze(0),
                                WaveToTensor(s.enrollment).unsqueeze(0));
        est = TensorToWave(y[0], s.mixture.sample_rate).samples;
        break;
      }
    }
    SampleScore sc;
    sc.id = s.id;
    sc.si_sdr_in = SiSdr(s.target.samples, s.mixture.samples);
    sc.si_sdr_out = SiSdr(s.target.samples, est);
    sc.si_sdri = sc.si_sdr_out - sc.si_sdr_in;
    sc.sdr = Sdr(s.target.samples, est, options.sdr_taps);
    if (!est_dir.empty()) {
      const auto path = (fs::path(est_dir) / (s.id + ".wav")).string();
      WriteWav(path, {est, s.mixture.sample_rate});
      for (const auto &m : options.external) {
        const double v = m.Score(s.target_path, path);
        if (m.name() == "stoi") sc.stoi = v;
        if (m.name() == "pesq") sc.pesq = v;
      }
    }
    report.samples.push_back(std::move(sc));
  }
  report.Finalize();
  if (model) model->train();
  return report;
}

}  // namespace tse
