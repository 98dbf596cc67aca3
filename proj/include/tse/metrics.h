// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef TSE_METRICS_H_
#define TSE_METRICS_H_

#include <span>
#include <vector>

namespace tse {

// Reported dB values are clamped to [-kMetricClampDb, +kMetricClampDb].
inline constexpr double kMetricClampDb = 60.0;
inline constexpr double kFailureThresholdDb = 1.0;
inline constexpr int kSdrFilterTaps = 512;

// Scale-invariant SDR:
//   alpha = <est, ref> / <ref, ref>
//   10 log10(|alpha ref|^2 / |alpha ref - est|^2)
// Throws DataError on length mismatch or an all-zero reference. An all-zero
// estimate gives -60.
double SiSdr(std::span<const float> ref, std::span<const float> est);

// SiSdr(ref, est) - SiSdr(ref, mix).
double SiSdri(std::span<const float> ref, std::span<const float> est,
              std::span<const float> mix);

// BSS-eval style SDR. The target component is the least-squares projection
// of est onto `filter_taps` delayed copies of ref; filter_taps <= 0 falls
// back to plain SNR.
double Sdr(std::span<const float> ref, std::span<const float> est,
           int filter_taps = kSdrFilterTaps);

double Snr(std::span<const float> ref, std::span<const float> est);

// Percentage of entries strictly below 1 dB. Throws DataError when empty.
double FailureRate(std::span<const double> si_sdri);

}  // namespace tse

#endif  // TSE_METRICS_H_
