// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "test_util.h"

#include <cmath>
#include <filesystem>
#include <random>

#include <unistd.h>

namespace fs = std::filesystem;

namespace tse::testing {

TempDir::TempDir() {
  static int counter = 0;
  path_ = (fs::temp_directory_path() /
           ("tse_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++)))
              .string();
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string TempDir::Sub(const std::string &name) const {
  return (fs::path(path_) / name).string();
}

std::vector<float> SyntheticSpeech(int speaker, int utterance,
                                   std::size_t length, int sample_rate) {
  std::mt19937 rng(1000 * speaker + utterance + 17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double pi = 3.14159265358979323846;
  const double f0 = 95.0 + 45.0 * speaker;
  const double formant1 = 500.0 + 120.0 * (speaker % 3);
  const double formant2 = 1500.0 + 260.0 * ((speaker + 1) % 4);
  const double contour_rate = 1.5 + u(rng);
  const double contour_phase = 2 * pi * u(rng);
  const double syllable_rate = 3.0 + 2.0 * u(rng);
  const double syllable_phase = 2 * pi * u(rng);

  auto resonance = [](double f, double centre, double bw) {
    const double d = (f - centre) / bw;
    return 1.0 / (1.0 + d * d);
  };

  std::vector<float> out(length);
  double phase = 0.0;
  std::normal_distribution<double> noise(0.0, 0.003);
  for (std::size_t n = 0; n < length; ++n) {
    const double t = static_cast<double>(n) / sample_rate;
    const double pitch =
        f0 * (1.0 + 0.06 * std::sin(2 * pi * contour_rate * t + contour_phase));
    phase += 2 * pi * pitch / sample_rate;
    double s = 0.0;
    for (int h = 1; h * pitch < 0.45 * sample_rate && h <= 40; ++h) {
      const double f = h * pitch;
      const double amp = resonance(f, formant1, 150.0) +
                         0.6 * resonance(f, formant2, 250.0) + 0.02;
      s += amp * std::sin(h * phase) / std::sqrt(h);
    }
    const double env =
        0.55 + 0.45 * std::sin(2 * pi * syllable_rate * t + syllable_phase);
    out[n] = static_cast<float>(0.08 * env * env * s + noise(rng));
  }
  return out;
}

void WriteSyntheticCorpus(const std::string &dir, int n_speakers,
                          int n_utterances, double seconds) {
  const auto length =
      static_cast<std::size_t>(std::lround(seconds * kDefaultSampleRate));
  for (int k = 0; k < n_speakers; ++k) {
    const fs::path spk = fs::path(dir) / ("spk" + std::to_string(k));
    fs::create_directories(spk);
    for (int i = 0; i < n_utterances; ++i)
      WriteWav((spk / ("utt" + std::to_string(i) + ".wav")).string(),
               {SyntheticSpeech(k, i, length), kDefaultSampleRate});
  }
}

Manifest MakeToyManifest(const std::string &dir, int n_mixtures,
                         std::uint64_t seed, int n_speakers, double seconds) {
  const std::string corpus = (fs::path(dir) / "corpus").string();
  WriteSyntheticCorpus(corpus, n_speakers, 3, seconds);
  auto scan = ScanCorpus(corpus, 0.1);
  auto manifest = BuildManifest(scan.utterances, seed, n_mixtures, Split::kTrain);
  Materialize(&manifest, (fs::path(dir) / "data").string());
  return manifest;
}

std::string TseBinary() { return TSE_BINARY_PATH; }

}  // namespace tse::testing
