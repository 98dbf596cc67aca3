// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Command-line front end: simulate, train, evaluate, extract, export-weights,
// print-config, scatter.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tse/common.h"
#include "tse/config.h"
#include "tse/datasim.h"
#include "tse/feature_map.h"
#include "tse/model.h"
#include "tse/report.h"
#include "tse/trainer.h"
#include "tse/wav.h"

namespace fs = std::filesystem;

namespace {

struct SimulateArgs {
  std::string corpus, out, split = "train";
  int n = 8;
  std::uint64_t seed = 0;
  double min_duration = 1.0;
  double gain_jitter = 0.0;
};

int Simulate(const SimulateArgs &a) {
  if (a.n < 1) throw tse::ConfigError("--n must be >= 1");
  if (!fs::is_directory(a.corpus))
    throw tse::DataError("corpus directory not found: " + a.corpus);
  auto scan = tse::ScanCorpus(a.corpus, a.min_duration);
  if (scan.skipped > 0)
    TSE_LOG_WARN("skipped ", scan.skipped, " unusable corpus files");
  auto manifest = tse::BuildManifest(scan.utterances, a.seed, a.n,
                                     tse::ParseSplit(a.split),
                                     tse::GainPolicy{a.gain_jitter});
  tse::Materialize(&manifest, a.out);
  std::cout << "wrote " << manifest.rows.size() << " mixtures to " << a.out
            << "/manifest.csv\n";
  return 0;
}

void WriteRunFiles(const tse::RunConfig &cfg, const fs::path &dir) {
  fs::create_directories(dir);
  std::ofstream(dir / "config.yaml") << cfg.ToYaml();
  std::ofstream(dir / "config_hash.txt") << cfg.Hash() << "\n";
}

int TrainOne(const tse::RunConfig &cfg, const std::string &out,
             const std::string &resume) {
  if (cfg.data.train_manifest.empty())
    throw tse::ConfigError("data.train_manifest is required for training");
  auto train = tse::LoadSamples(cfg.data.train_manifest);
  std::vector<tse::Sample> dev;
  if (!cfg.data.dev_manifest.empty())
    dev = tse::LoadSamples(cfg.data.dev_manifest);
  WriteRunFiles(cfg, out);
  tse::Trainer trainer(tse::BuildModel(cfg), cfg);
  if (!resume.empty()) trainer.Resume(resume);
  auto r = trainer.Fit(train, dev, out);
  std::cout << "config " << cfg.Hash() << ": " << r.steps << " steps, best "
            << (dev.empty() ? "train" : "dev") << " SI-SDRi "
            << r.best_dev_si_sdri << " dB, backbone max |delta| "
            << r.backbone_max_delta << "\n";
  return 0;
}

struct TrainArgs {
  std::string config, out, resume, ablation;
  std::vector<std::string> sets;
};

int Train(const TrainArgs &a) {
  if (a.ablation.empty()) {
    return TrainOne(tse::LoadConfig(a.config, a.sets), a.out, a.resume);
  }
  if (a.ablation != "table2")
    throw tse::ConfigError("unknown ablation '" + a.ablation + "'");
  if (!a.resume.empty())
    throw tse::ConfigError("--resume cannot be combined with --ablation");
  for (const auto &row : tse::Table2Ablation()) {
    auto sets = a.sets;
    for (const auto &[k, v] : row.overrides) sets.push_back(k + "=" + v);
    std::cout << "== " << row.label << "\n";
    TrainOne(tse::LoadConfig(a.config, sets), (fs::path(a.out) / row.label).string(),
             "");
  }
  return 0;
}

struct EvaluateArgs {
  std::string checkpoint, manifest, out, debug, config;
  std::vector<std::string> sets;
  bool write_estimates = false;
};

int Evaluate(const EvaluateArgs &a) {
  tse::EvalOptions opt;
  tse::RunConfig cfg;
  std::shared_ptr<tse::TseModel> model;
  if (a.debug.empty()) {
    if (a.checkpoint.empty())
      throw tse::ConfigError("--checkpoint is required unless --debug is set");
    auto loaded = tse::LoadModelCheckpoint(a.checkpoint);
    model = loaded.model;
    cfg = loaded.config;
  } else {
    if (a.debug == "oracle")
      opt.mode = tse::EvalMode::kOracle;
    else if (a.debug == "passthrough")
      opt.mode = tse::EvalMode::kPassthrough;
    else
      throw tse::ConfigError("--debug must be oracle or passthrough");
    cfg = a.checkpoint.empty() ? tse::LoadConfig(a.config, a.sets)
                               : tse::LoadModelCheckpoint(a.checkpoint).config;
  }
  opt.sdr_taps = cfg.eval.sdr_taps;
  if (!cfg.eval.stoi_command.empty())
    opt.external.emplace_back("stoi", cfg.eval.stoi_command);
  if (!cfg.eval.pesq_command.empty())
    opt.external.emplace_back("pesq", cfg.eval.pesq_command);
  const std::string manifest =
      a.manifest.empty() ? cfg.data.test_manifest : a.manifest;
  if (manifest.empty())
    throw tse::ConfigError("no manifest given (--manifest or data.test_manifest)");
  fs::create_directories(a.out);
  if (a.write_estimates) opt.estimate_dir = (fs::path(a.out) / "est").string();

  auto report =
      tse::Evaluate(model.get(), tse::LoadSamples(manifest), opt);
  report.config_hash = cfg.Hash();
  tse::WriteReportJson(report, (fs::path(a.out) / "report.json").string());
  tse::WriteReportCsv(report, (fs::path(a.out) / "report.csv").string());
  std::cout << "n=" << report.samples.size()
            << " SI-SDRi=" << report.mean_si_sdri << " dB"
            << " SDR=" << report.mean_sdr << " dB"
            << " FR=" << report.failure_rate << "%\n";
  return 0;
}

struct ExtractArgs {
  std::string checkpoint, mixture, enrollment, out;
};

int Extract(const ExtractArgs &a) {
  auto loaded = tse::LoadModelCheckpoint(a.checkpoint);
  const auto mix = tse::ReadWav(a.mixture);
  const auto enroll = tse::ReadWav(a.enrollment);
  const int sr = loaded.config.data.sample_rate;
  if (mix.sample_rate != sr || enroll.sample_rate != sr)
    throw tse::DataError("inputs must be sampled at " + std::to_string(sr) +
                         " Hz");
  torch::NoGradGuard no_grad;
  loaded.model->eval();
  auto y = loaded.model->Forward(tse::WaveToTensor(mix).unsqueeze(0),
                                 tse::WaveToTensor(enroll).unsqueeze(0));
  tse::WriteWav(a.out, tse::TensorToWave(y[0], sr));
  return 0;
}

int ExportWeights(const std::string &checkpoint, const std::string &out) {
  auto loaded = tse::LoadModelCheckpoint(checkpoint);
  const auto records = loaded.model->ExportLayerWeights();
  if (records.empty())
    throw tse::ConfigError("this model has no layer-weight sets");
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw tse::DataError("cannot write " + out);
  }
  std::ostream &os = out.empty() ? std::cout : file;
  for (const auto &r : records) os << tse::FormatWeightsRow(r, 8) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Target speech extraction with SSL features"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  SimulateArgs sim;
  auto *c_sim = app.add_subcommand("simulate", "build a two-speaker manifest");
  c_sim->add_option("--corpus", sim.corpus, "speaker-per-directory corpus")
      ->required();
  c_sim->add_option("--out", sim.out, "output directory")->required();
  c_sim->add_option("--n", sim.n, "number of mixtures");
  c_sim->add_option("--seed", sim.seed, "random seed");
  c_sim->add_option("--split", sim.split, "train | dev | test");
  c_sim->add_option("--min-duration", sim.min_duration, "seconds");
  c_sim->add_option("--gain-jitter", sim.gain_jitter, "dB, 0 for equal gains");

  TrainArgs tr;
  auto *c_train = app.add_subcommand("train", "train a model");
  c_train->add_option("config,--config", tr.config, "YAML config");
  c_train->add_option("--set", tr.sets, "dotted-key override a.b=c");
  c_train->add_option("--out", tr.out, "run directory")->required();
  c_train->add_option("--resume", tr.resume, "checkpoint to resume from");
  c_train->add_option("--ablation", tr.ablation, "table2");

  EvaluateArgs ev;
  auto *c_eval = app.add_subcommand("evaluate", "score a manifest");
  c_eval->add_option("--checkpoint", ev.checkpoint, "model checkpoint");
  c_eval->add_option("--manifest", ev.manifest, "manifest.csv");
  c_eval->add_option("--out", ev.out, "report directory")->required();
  c_eval->add_option("--debug", ev.debug, "oracle | passthrough");
  c_eval->add_option("--config", ev.config, "config for debug runs");
  c_eval->add_option("--set", ev.sets, "dotted-key override a.b=c");
  c_eval->add_flag("--write-estimates", ev.write_estimates);

  ExtractArgs ex;
  auto *c_ex = app.add_subcommand("extract", "extract one target speaker");
  c_ex->add_option("--checkpoint", ex.checkpoint)->required();
  c_ex->add_option("--mixture", ex.mixture)->required();
  c_ex->add_option("--enrollment", ex.enrollment)->required();
  c_ex->add_option("--out", ex.out)->required();

  std::string wcheckpoint, wout;
  auto *c_w = app.add_subcommand("export-weights",
                                 "normalized layer weights as CSV rows");
  c_w->add_option("--checkpoint", wcheckpoint)->required();
  c_w->add_option("--out", wout, "CSV path (stdout when omitted)");

  std::string pconfig, pablation;
  std::vector<std::string> psets;
  bool pkeys = false, phash = false;
  auto *c_print = app.add_subcommand("print-config", "show the resolved config");
  c_print->add_option("--config", pconfig);
  c_print->add_option("--set", psets);
  c_print->add_option("--ablation", pablation, "table2");
  c_print->add_flag("--keys", pkeys, "list every dotted key");
  c_print->add_flag("--hash", phash, "print only the config hash");

  std::string sbase, sprop, sout;
  auto *c_sc = app.add_subcommand("scatter",
                                  "per-sample SI-SDRi pairs of two reports");
  c_sc->add_option("--baseline", sbase)->required();
  c_sc->add_option("--proposed", sprop)->required();
  c_sc->add_option("--out", sout)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (verbose) tse::SetLogLevel(tse::LogLevel::kDebug);

  try {
    if (*c_sim) return Simulate(sim);
    if (*c_train) return Train(tr);
    if (*c_eval) return Evaluate(ev);
    if (*c_ex) return Extract(ex);
    if (*c_w) return ExportWeights(wcheckpoint, wout);
    if (*c_print) {
      if (pkeys) {
        for (const auto &k : tse::ConfigKeys()) std::cout << k << "\n";
        return 0;
      }
      if (!pablation.empty()) {
        if (pablation != "table2")
          throw tse::ConfigError("unknown ablation '" + pablation + "'");
        for (const auto &row : tse::Table2Ablation()) {
          auto sets = psets;
          for (const auto &[k, v] : row.overrides) sets.push_back(k + "=" + v);
          std::cout << row.label << " " << tse::LoadConfig(pconfig, sets).Hash();
          for (const auto &[k, v] : row.overrides) std::cout << " " << k << "=" << v;
          std::cout << "\n";
        }
        return 0;
      }
      auto cfg = tse::LoadConfig(pconfig, psets);
      if (phash)
        std::cout << cfg.Hash() << "\n";
      else
        std::cout << cfg.ToYaml();
      return 0;
    }
    if (*c_sc) {
      tse::WriteScatterCsv(tse::ReadReportJson(sbase), tse::ReadReportJson(sprop),
                           sout);
      return 0;
    }
  } catch (const tse::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.ExitCode();
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
