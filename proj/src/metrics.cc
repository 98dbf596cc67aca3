// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "tse/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "tse/common.h"

namespace tse {

namespace {

double ClampDb(double db) {
  if (std::isnan(db)) return -kMetricClampDb;
  return std::clamp(db, -kMetricClampDb, kMetricClampDb);
}

// 10 log10(num / den) with the +/-inf limits mapped onto the clamp.
double RatioDb(double num, double den) {
  if (den <= 0.0) return num > 0.0 ? kMetricClampDb : -kMetricClampDb;
  if (num <= 0.0) return -kMetricClampDb;
  return ClampDb(10.0 * std::log10(num / den));
}

void CheckPair(std::span<const float> ref, std::span<const float> est) {
  if (ref.size() != est.size())
    throw DataError(internal::Concat("length mismatch: reference ", ref.size(),
                                     " vs estimate ", est.size()));
  if (ref.empty()) throw DataError("empty signal");
}

double Energy(std::span<const float> x) {
  double e = 0.0;
  for (float v : x) e += static_cast<double>(v) * v;
  return e;
}

}  // namespace

double SiSdr(std::span<const float> ref, std::span<const float> est) {
  CheckPair(ref, est);
  const double ref_energy = Energy(ref);
  if (ref_energy == 0.0) throw DataError("SI-SDR undefined for a zero reference");
  double dot = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i)
    dot += static_cast<double>(ref[i]) * est[i];
  const double alpha = dot / ref_energy;
  double target = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    double t = alpha * ref[i];
    double e = t - est[i];
    target += t * t;
    noise += e * e;
  }
  return RatioDb(target, noise);
}

double SiSdri(std::span<const float> ref, std::span<const float> est,
              std::span<const float> mix) {
  return SiSdr(ref, est) - SiSdr(ref, mix);
}

double Snr(std::span<const float> ref, std::span<const float> est) {
  CheckPair(ref, est);
  double signal = Energy(ref), noise = 0.0;
  if (signal == 0.0) throw DataError("SNR undefined for a zero reference");
  for (std::size_t i = 0; i < ref.size(); ++i) {
    double e = static_cast<double>(ref[i]) - est[i];
    noise += e * e;
  }
  return RatioDb(signal, noise);
}

double Sdr(std::span<const float> ref, std::span<const float> est,
           int filter_taps) {
  if (filter_taps <= 0) return Snr(ref, est);
  CheckPair(ref, est);
  if (Energy(ref) == 0.0) throw DataError("SDR undefined for a zero reference");
  const int n = static_cast<int>(ref.size());
  const int taps = std::min(filter_taps, n);

  // Zero-padded delays make the Gram matrix exactly Toeplitz.
  Eigen::VectorXd autocorr = Eigen::VectorXd::Zero(taps);
  Eigen::VectorXd cross = Eigen::VectorXd::Zero(taps);
  for (int k = 0; k < taps; ++k) {
    double r = 0.0, c = 0.0;
    for (int m = 0; m + k < n; ++m) {
      r += static_cast<double>(ref[m]) * ref[m + k];
      c += static_cast<double>(ref[m]) * est[m + k];
    }
    autocorr[k] = r;
    cross[k] = c;
  }
  Eigen::MatrixXd gram(taps, taps);
  for (int i = 0; i < taps; ++i)
    for (int j = 0; j < taps; ++j) gram(i, j) = autocorr[std::abs(i - j)];
  gram.diagonal().array() += 1e-10 * autocorr[0];
  Eigen::VectorXd coef = gram.ldlt().solve(cross);

  const int padded = n + taps - 1;
  double target = 0.0, noise = 0.0;
  for (int t = 0; t < padded; ++t) {
    double proj = 0.0;
    for (int k = std::max(0, t - n + 1); k < taps && k <= t; ++k)
      proj += coef[k] * ref[t - k];
    double e = (t < n ? static_cast<double>(est[t]) : 0.0) - proj;
    target += proj * proj;
    noise += e * e;
  }
  return RatioDb(target, noise);
}

double FailureRate(std::span<const double> si_sdri) {
  if (si_sdri.empty()) throw DataError("failure rate of an empty list");
  std::size_t failures = std::count_if(
      si_sdri.begin(), si_sdri.end(),
      [](double v) { return v < kFailureThresholdDb; });
  return 100.0 * static_cast<double>(failures) /
         static_cast<double>(si_sdri.size());
}

}  // namespace tse
