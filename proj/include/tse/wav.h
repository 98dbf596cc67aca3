// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef TSE_WAV_H_
#define TSE_WAV_H_

#include <cstdint>
#include <string>
#include <vector>

namespace tse {

inline constexpr int kDefaultSampleRate = 16000;

// Mono audio signal. The unit of all file I/O.
struct Waveform {
  std::vector<float> samples;
  int sample_rate = kDefaultSampleRate;

  std::size_t size() const { return samples.size(); }
  double Duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

enum class SampleFormat { kPcm16, kFloat32 };

struct WavInfo {
  int channels = 0;
  int sample_rate = 0;
  int bits_per_sample = 0;
  bool is_float = false;
  std::int64_t num_frames = 0;
};

// Parses the RIFF header only. Throws DataError on malformed files.
WavInfo ReadWavInfo(const std::string &path);

// Reads a mono PCM16 / float32 file. Multichannel input is a DataError.
Waveform ReadWav(const std::string &path);

void WriteWav(const std::string &path, const Waveform &wave,
              SampleFormat format = SampleFormat::kFloat32);

}  // namespace tse

#endif  // TSE_WAV_H_
