// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Run configuration. Every field is addressable by a dotted key
// ("tdsb.fuse_ssl", "train.lr_main", ...). Config files are YAML with nested
// sections; `preset` selects the defaults the remaining keys override.

#ifndef TSE_CONFIG_H_
#define TSE_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tse/aie.h"
#include "tse/backbone.h"
#include "tse/spk_encoder.h"
#include "tse/superb.h"
#include "tse/tdsb.h"

namespace tse {

enum class Preset { kTiny, kFull };
enum class ModelType { kTdsb, kSuperb };
enum class SpeakerEncoderType { kTcn, kMhfa };

struct DataSection {
  std::string train_manifest;
  std::string dev_manifest;
  std::string test_manifest;
  int sample_rate = kDefaultSampleRate;
};

struct BackboneSection {
  std::string preset = "tiny";  // tiny | base
  std::string checkpoint;       // empty: random initialization
  std::string name_map;
  std::string source_prefix;
};

struct SpeakerEncoderSection {
  SpeakerEncoderType type = SpeakerEncoderType::kMhfa;
  MhfaConfig mhfa;
  TcnSpeakerConfig tcn;
};

struct TrainSection {
  double lr_main = 1e-3;
  double lr_finetune = 2e-5;
  bool freeze_backbone = true;
  int max_epochs = 10;
  int max_steps = 0;  // 0: no step limit
  int batch_size = 4;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  std::string init_from;  // checkpoint to restore model weights from
  int log_every = 10;
  int eval_every = 1;  // epochs between dev evaluations
};

struct EvalSection {
  int sdr_taps = 512;
  std::string stoi_command;
  std::string pesq_command;
};

struct RunConfig {
  Preset preset = Preset::kTiny;
  ModelType model = ModelType::kTdsb;
  DataSection data;
  BackboneSection backbone;
  AieConfig aie;
  SpeakerEncoderSection spk_encoder;
  TdsbConfig tdsb;
  SuperbConfig superb;
  TrainSection train;
  EvalSection eval;

  static RunConfig ForPreset(Preset preset);

  // Applies one dotted-key assignment. Unknown keys and unparsable values
  // raise ConfigError naming the key. Setting "preset" resets all defaults.
  void Set(const std::string &key, const std::string &value);
  std::string Get(const std::string &key) const;

  // Sorted key -> value over every addressable field.
  std::map<std::string, std::string> Flatten() const;
  // FNV-1a (64 bit) over the flattened "key=value\n" lines, as 16 hex digits.
  std::string Hash() const;
  std::string ToYaml() const;

  // Cross-section checks (backbone needed, widths consistent, lr order).
  void Validate() const;

  bool NeedsBackbone() const;
};

std::vector<std::string> ConfigKeys();

// Parses "a.b=c". Throws ConfigError on malformed input.
std::pair<std::string, std::string> ParseAssignment(const std::string &text);

// Reads a YAML file (or uses the preset defaults when path is empty), then
// applies the overrides in order. A `preset` key, wherever it appears, is
// applied before everything else.
RunConfig LoadConfig(const std::string &path,
                     const std::vector<std::string> &overrides = {});
RunConfig ConfigFromYamlString(const std::string &yaml,
                               const std::vector<std::string> &overrides = {});

BackboneConfig MakeBackboneConfig(const RunConfig &cfg);

struct AblationRow {
  std::string label;
  std::vector<std::pair<std::string, std::string>> overrides;
};

// The eight SpkEnc x feature-source x fusion configurations compared for the
// time-domain extractor, starting with the TCN baseline.
std::vector<AblationRow> Table2Ablation();

}  // namespace tse

#endif  // TSE_CONFIG_H_
