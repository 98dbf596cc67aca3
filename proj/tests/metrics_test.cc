// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.h"
#include "tse/common.h"
#include "tse/metrics.h"
#include "tse/report.h"

namespace tse {
namespace {

std::vector<float> Noise(std::size_t n, unsigned seed, float sigma = 1.0f) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> d(0.0f, sigma);
  std::vector<float> v(n);
  for (auto &x : v) x = d(rng);
  return v;
}

TEST(SiSdr, HandExample) {
  // alpha = 1, error = [0, 1]: ratio 1/1.
  EXPECT_NEAR(SiSdr(std::vector<float>{1, 0}, std::vector<float>{1, 1}), 0.0,
              1e-12);
  // alpha = 17/14, |target|^2 = 289/14, |error|^2 = 5/14.
  EXPECT_NEAR(SiSdr(std::vector<float>{1, 2, 3}, std::vector<float>{1, 2, 4}),
              10 * std::log10(57.8), 1e-9);
}

TEST(SiSdr, ClampsAndScaleInvariance) {
  auto x = Noise(800, 1);
  std::vector<float> scaled(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) scaled[i] = 3.7f * x[i];
  EXPECT_EQ(SiSdr(x, x), kMetricClampDb);
  EXPECT_EQ(SiSdr(x, scaled), kMetricClampDb);
  EXPECT_EQ(SiSdr(x, std::vector<float>(x.size(), 0.0f)), -kMetricClampDb);

  auto y = Noise(800, 2);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
  for (float c : {0.001f, 0.5f, 42.0f}) {
    std::vector<float> cy(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) cy[i] = c * y[i];
    EXPECT_NEAR(SiSdr(x, y), SiSdr(x, cy), 1e-6);
  }
}

TEST(SiSdr, Errors) {
  std::vector<float> zero(4, 0.0f), one(4, 1.0f), three(3, 1.0f);
  EXPECT_THROW(SiSdr(zero, one), DataError);
  EXPECT_THROW(SiSdr(one, three), DataError);
}

TEST(SiSdri, IdentitiesAndClampArithmetic) {
  auto ref = Noise(1000, 3);
  auto other = Noise(1000, 4);
  std::vector<float> mix(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) mix[i] = ref[i] + other[i];
  EXPECT_EQ(SiSdri(ref, mix, mix), 0.0);
  const double s_in = SiSdr(ref, mix);
  EXPECT_NEAR(SiSdri(ref, ref, mix), kMetricClampDb - s_in, 1e-12);
  EXPECT_GT(SiSdri(ref, ref, mix), 0.0);
}

TEST(Sdr, FilterAbsorbsShortDelay) {
  auto x = Noise(4000, 5);
  std::vector<float> delayed(x.size(), 0.0f);
  for (std::size_t i = 5; i < x.size(); ++i) delayed[i] = x[i - 5];
  // The filtered projection spills 5 samples past the end of the estimate.
  double total = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    total += static_cast<double>(x[i]) * x[i];
    if (i + 5 >= x.size()) tail += static_cast<double>(x[i]) * x[i];
  }
  // A pure delay filter attains this; the least-squares filter can only do
  // better.
  const double delta_db = 10 * std::log10(total / tail);
  EXPECT_GE(Sdr(x, delayed), delta_db - 1e-6);
  EXPECT_LT(Sdr(x, delayed), delta_db + 1.0);
  EXPECT_EQ(Sdr(x, x), kMetricClampDb);
  // Without the filter the delay is pure distortion.
  EXPECT_LT(Sdr(x, delayed, 0), 1.0);
}

TEST(Sdr, NoiseEstimateIsStronglyNegative) {
  // A 512-tap filter explains about 512/N of independent noise.
  auto x = Noise(32000, 6);
  auto n = Noise(32000, 7, 10.0f);
  EXPECT_NEAR(Sdr(x, n), 10 * std::log10(512.0 / 32000), 1.0);
}

TEST(Snr, PlainRatio) {
  EXPECT_NEAR(Snr(std::vector<float>{1, 0}, std::vector<float>{1, 1}), 0.0,
              1e-12);
  EXPECT_NEAR(Snr(std::vector<float>{2, 0}, std::vector<float>{2, 0.2f}), 20.0,
              1e-5);
}

TEST(FailureRate, CountsBelowOneDb) {
  EXPECT_DOUBLE_EQ(FailureRate(std::vector<double>{0.5, 2.0, 0.9, 3.0, 1.5}),
                   40.0);
  EXPECT_DOUBLE_EQ(FailureRate(std::vector<double>{1.0, 2.0}), 0.0);
  EXPECT_DOUBLE_EQ(FailureRate(std::vector<double>{0.0, -5.0}), 100.0);
  EXPECT_THROW(FailureRate(std::vector<double>{}), DataError);
}

TEST(FailureRate, MonotoneInImprovement) {
  std::vector<double> v{0.2, 0.8, 1.2, 5.0};
  double prev = FailureRate(v);
  for (int k = 0; k < 10; ++k) {
    for (auto &x : v) x += 0.1;
    const double fr = FailureRate(v);
    EXPECT_LE(fr, prev);
    EXPECT_GE(fr, 0.0);
    prev = fr;
  }
}

EvalReport SampleReport() {
  EvalReport r;
  r.config_hash = "abc";
  r.samples = {{"a", 0.0, 5.0, 5.0, 6.0, std::nullopt, std::nullopt},
               {"b", 1.0, 1.5, 0.5, 2.0, std::nullopt, std::nullopt}};
  r.Finalize();
  return r;
}

TEST(Report, AggregatesAndJsonRoundTrip) {
  auto r = SampleReport();
  EXPECT_DOUBLE_EQ(r.mean_si_sdri, 2.75);
  EXPECT_DOUBLE_EQ(r.mean_sdr, 4.0);
  EXPECT_DOUBLE_EQ(r.failure_rate, 50.0);
  EXPECT_FALSE(r.mean_stoi.has_value());

  testing::TempDir dir;
  WriteReportJson(r, dir.Sub("r.json"));
  auto back = ReadReportJson(dir.Sub("r.json"));
  EXPECT_EQ(back.config_hash, "abc");
  ASSERT_EQ(back.samples.size(), 2u);
  EXPECT_EQ(back.samples[1].id, "b");
  EXPECT_DOUBLE_EQ(back.mean_si_sdri, 2.75);
  std::ifstream json(dir.Sub("r.json"));
  std::stringstream ss;
  ss << json.rdbuf();
  EXPECT_EQ(ss.str().find("stoi"), std::string::npos);
}

TEST(Report, CsvLayouts) {
  auto r = SampleReport();
  testing::TempDir dir;
  WriteReportCsv(r, dir.Sub("r.csv"));
  std::ifstream is(dir.Sub("r.csv"));
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header, "id,si_sdr_in,si_sdr_out,si_sdri,sdr");
  EXPECT_EQ(row.substr(0, 2), "a,");

  auto p = r;
  p.samples[0].si_sdri = 9.0;
  WriteScatterCsv(r, p, dir.Sub("s.csv"));
  std::ifstream sc(dir.Sub("s.csv"));
  std::getline(sc, header);
  std::getline(sc, row);
  EXPECT_EQ(header, "id,si_sdri_baseline,si_sdri_proposed");
  EXPECT_EQ(row, "a,5.000000,9.000000");
}

TEST(Report, ScatterPairsById) {
  auto r = SampleReport();
  auto p = r;
  p.samples[1].id = "zzz";
  testing::TempDir dir;
  WriteScatterCsv(r, p, dir.Sub("s.csv"));
  std::ifstream is(dir.Sub("s.csv"));
  int lines = 0;
  for (std::string l; std::getline(is, l);) ++lines;
  EXPECT_EQ(lines, 2);
  p.samples[0].id = "yyy";
  EXPECT_THROW(WriteScatterCsv(r, p, dir.Sub("s.csv")), DataError);
}

TEST(ExternalMetric, ParsesLastNumberAndFailsLoudly) {
  ExternalMetric ok("stoi", "echo score");
  // echo prints "score <ref> <est>": no number.
  EXPECT_THROW(ok.Score("a", "b"), DataError);
  ExternalMetric num("stoi", "printf '0.25\\n0.875\\n' #");
  EXPECT_DOUBLE_EQ(num.Score("a", "b"), 0.875);
  ExternalMetric bad("pesq", "false");
  EXPECT_THROW(bad.Score("a", "b"), DataError);
}

}  // namespace
}  // namespace tse
