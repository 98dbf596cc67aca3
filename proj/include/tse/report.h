// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef TSE_REPORT_H_
#define TSE_REPORT_H_

#include <optional>
#include <string>
#include <vector>

namespace tse {

struct SampleScore {
  std::string id;
  double si_sdr_in = 0.0;
  double si_sdr_out = 0.0;
  double si_sdri = 0.0;
  double sdr = 0.0;
  std::optional<double> stoi;
  std::optional<double> pesq;
};

struct EvalReport {
  std::vector<SampleScore> samples;
  double mean_si_sdri = 0.0;
  double mean_sdr = 0.0;
  double failure_rate = 0.0;  // percent
  std::optional<double> mean_stoi;
  std::optional<double> mean_pesq;
  std::string config_hash;

  // Recomputes the aggregates from `samples`.
  void Finalize();
};

void WriteReportJson(const EvalReport &report, const std::string &path);
EvalReport ReadReportJson(const std::string &path);

// Per-sample CSV: id,si_sdr_in,si_sdr_out,si_sdri,sdr
void WriteReportCsv(const EvalReport &report, const std::string &path);

// Scatter data for per-sample system comparison:
//   id,si_sdri_baseline,si_sdri_proposed
// Only ids present in both reports are written, in baseline order.
void WriteScatterCsv(const EvalReport &baseline, const EvalReport &proposed,
                     const std::string &path);

// Runs `command <ref.wav> <est.wav>` and parses the last number printed on
// stdout. Used for STOI/PESQ, which are not implemented here.
class ExternalMetric {
 public:
  ExternalMetric(std::string name, std::string command)
      : name_(std::move(name)), command_(std::move(command)) {}

  const std::string &name() const { return name_; }
  double Score(const std::string &ref_wav, const std::string &est_wav) const;

 private:
  std::string name_;
  std::string command_;
};

}  // namespace tse

#endif  // TSE_REPORT_H_
