// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "tse/report.h"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>

#include <nlohmann/json.hpp>

#include "tse/common.h"
#include "tse/metrics.h"

namespace tse {

namespace {

std::string ShellQuote(const std::string &s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

std::optional<double> MeanOf(const std::vector<SampleScore> &samples,
                             std::optional<double> SampleScore::*field) {
  double sum = 0.0;
  for (const auto &s : samples) {
    if (!(s.*field)) return std::nullopt;
    sum += *(s.*field);
  }
  if (samples.empty()) return std::nullopt;
  return sum / samples.size();
}

}  // namespace

void EvalReport::Finalize() {
  if (samples.empty()) throw DataError("evaluation report has no samples");
  std::vector<double> improvements;
  double sdr_sum = 0.0, sisdri_sum = 0.0;
  for (const auto &s : samples) {
    improvements.push_back(s.si_sdri);
    sisdri_sum += s.si_sdri;
    sdr_sum += s.sdr;
  }
  mean_si_sdri = sisdri_sum / samples.size();
  mean_sdr = sdr_sum / samples.size();
  failure_rate = FailureRate(improvements);
  mean_stoi = MeanOf(samples, &SampleScore::stoi);
  mean_pesq = MeanOf(samples, &SampleScore::pesq);
}

void WriteReportJson(const EvalReport &report, const std::string &path) {
  nlohmann::ordered_json j;
  j["config_hash"] = report.config_hash;
  j["n"] = report.samples.size();
  j["mean_si_sdri"] = report.mean_si_sdri;
  j["mean_sdr"] = report.mean_sdr;
  j["failure_rate"] = report.failure_rate;
  if (report.mean_stoi) j["mean_stoi"] = *report.mean_stoi;
  if (report.mean_pesq) j["mean_pesq"] = *report.mean_pesq;
  auto rows = nlohmann::ordered_json::array();
  for (const auto &s : report.samples) {
    nlohmann::ordered_json r{{"id", s.id},
                             {"si_sdr_in", s.si_sdr_in},
                             {"si_sdr_out", s.si_sdr_out},
                             {"si_sdri", s.si_sdri},
                             {"sdr", s.sdr}};
    if (s.stoi) r["stoi"] = *s.stoi;
    if (s.pesq) r["pesq"] = *s.pesq;
    rows.push_back(std::move(r));
  }
  j["samples"] = std::move(rows);
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  os << j.dump(2) << "\n";
}

EvalReport ReadReportJson(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open report " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception &e) {
    throw DataError("malformed report " + path + ": " + e.what());
  }
  EvalReport r;
  r.config_hash = j.value("config_hash", "");
  for (const auto &s : j.at("samples")) {
    SampleScore x;
    x.id = s.at("id").get<std::string>();
    x.si_sdr_in = s.at("si_sdr_in").get<double>();
    x.si_sdr_out = s.at("si_sdr_out").get<double>();
    x.si_sdri = s.at("si_sdri").get<double>();
    x.sdr = s.at("sdr").get<double>();
    if (s.contains("stoi")) x.stoi = s["stoi"].get<double>();
    if (s.contains("pesq")) x.pesq = s["pesq"].get<double>();
    r.samples.push_back(std::move(x));
  }
  r.Finalize();
  return r;
}

void WriteReportCsv(const EvalReport &report, const std::string &path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  os << "id,si_sdr_in,si_sdr_out,si_sdri,sdr\n" << std::setprecision(6)
     << std::fixed;
  for (const auto &s : report.samples) {
    os << s.id << "," << s.si_sdr_in << "," << s.si_sdr_out << ","
       << s.si_sdri << "," << s.sdr << "\n";
  }
}

void WriteScatterCsv(const EvalReport &baseline, const EvalReport &proposed,
                     const std::string &path) {
  std::map<std::string, double> prop;
  for (const auto &s : proposed.samples) prop[s.id] = s.si_sdri;
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  os << "id,si_sdri_baseline,si_sdri_proposed\n" << std::setprecision(6)
     << std::fixed;
  int written = 0;
  for (const auto &s : baseline.samples) {
    auto it = prop.find(s.id);
    if (it == prop.end()) continue;
    os << s.id << "," << s.si_sdri << "," << it->second << "\n";
    ++written;
  }
  if (written == 0) throw DataError("reports share no sample ids");
}

double ExternalMetric::Score(const std::string &ref_wav,
                             const std::string &est_wav) const {
  std::string cmd =
      command_ + " " + ShellQuote(ref_wav) + " " + ShellQuote(est_wav);
  std::unique_ptr<FILE, int (*)(FILE *)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe) throw DataError("cannot run metric plug-in: " + cmd);
  std::string out;
  char buf[256];
  while (std::fgets(buf, sizeof(buf), pipe.get())) out += buf;
  int status = pclose(pipe.release());
  if (status != 0)
    throw DataError(internal::Concat(name_, " plug-in failed (status ", status,
                                     "): ", cmd));
  std::istringstream is(out);
  std::string tok;
  std::optional<double> last;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used == tok.size()) last = v;
    } catch (const std::exception &) {
    }
  }
  if (!last)
    throw DataError(name_ + " plug-in printed no number: " + cmd);
  return *last;
}

}  // namespace tse
