// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Two-speaker mixture simulation with enrollment utterances, and the
// manifest format shared by training and evaluation.
//
// Corpus layout: <corpus>/<speaker_id>/*.wav (mono PCM16 or float32).
// Manifest CSV header:
//   mixture_path,source1_path,source2_path,speaker1,speaker2,
//   enrollment_path,target_index
// Relative paths in a manifest are resolved against the manifest's directory.

#ifndef TSE_DATASIM_H_
#define TSE_DATASIM_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tse/wav.h"

namespace tse {

struct Utterance {
  std::string path;
  std::string speaker_id;
  double duration = 0.0;
  int sample_rate = kDefaultSampleRate;
};

struct ScanResult {
  std::vector<Utterance> utterances;  // sorted by path
  int skipped = 0;                    // unreadable, multichannel, wrong rate
};

// Throws DataError("no utterances found ...") when nothing survives.
ScanResult ScanCorpus(const std::string &dir, double min_duration,
                      int sample_rate = kDefaultSampleRate);

enum class Split { kTrain, kDev, kTest };

std::string SplitName(Split split);
Split ParseSplit(const std::string &name);

// Both sources at 0 dB unless jitter_db > 0, in which case each gain is
// drawn uniformly from [-jitter_db, +jitter_db].
struct GainPolicy {
  double jitter_db = 0.0;
};

struct MixtureSample {
  std::string id;
  std::string mixture_path;
  std::array<std::string, 2> source_paths;  // materialized references
  std::array<std::string, 2> speaker_ids;
  std::string enrollment_path;
  int target_index = 0;

  // Provenance, recorded in the JSON sidecar only.
  std::array<std::string, 2> source_utterances;
  std::array<double, 2> gains_db{0.0, 0.0};
  double scale = 1.0;

  const std::string &TargetSpeaker() const { return speaker_ids[target_index]; }
  const std::string &TargetSource() const { return source_paths[target_index]; }
};

struct Manifest {
  std::vector<MixtureSample> rows;
  std::uint64_t seed = 0;
  Split split = Split::kTrain;
  GainPolicy gains;
  std::string root;  // directory relative paths resolve against

  std::string Resolve(const std::string &path) const;
};

// Deterministic in (utterances, seed, n_mixtures, split). Each row draws from
// its own generator keyed by (seed, split, row index).
Manifest BuildManifest(const std::vector<Utterance> &utterances,
                       std::uint64_t seed, int n_mixtures, Split split,
                       const GainPolicy &gains = {});

struct MixResult {
  Waveform mixture;
  std::array<Waveform, 2> references;  // gained, truncated and scaled
  double scale = 1.0;                  // joint peak-normalization factor
};

inline constexpr float kPeakLimit = 0.9f;

// Min-length mix of two gained sources. If the mixture peak would exceed
// full scale, mixture and references are jointly scaled to a peak of 0.9.
MixResult Mix(const Waveform &a, const Waveform &b, double gain_db_a,
              double gain_db_b);

// Mixes every row, writes mix/ s1/ s2/ WAVs plus manifest.csv and
// manifest.json under out_dir, and fills in the per-row scale.
void Materialize(Manifest *manifest, const std::string &out_dir);

void WriteManifestCsv(const Manifest &manifest, const std::string &path);
void WriteManifestJson(const Manifest &manifest, const std::string &path);
Manifest ReadManifestCsv(const std::string &path);

// Validates the row invariants; throws DataError naming the offending row.
void CheckManifest(const Manifest &manifest);

}  // namespace tse

#endif  // TSE_DATASIM_H_
