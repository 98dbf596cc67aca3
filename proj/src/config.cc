// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "tse/config.h"

#include <charconv>
#include <cstdio>
#include <functional>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "tse/common.h"

namespace tse {

namespace {

[[noreturn]] void BadValue(const std::string &key, const std::string &value,
                           const std::string &expected) {
  throw ConfigError(internal::Concat("invalid value '", value, "' for ", key,
                                     " (expected ", expected, ")"));
}

std::int64_t ParseInt(const std::string &key, const std::string &v) {
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty())
    BadValue(key, v, "an integer");
  return out;
}

std::uint64_t ParseUint(const std::string &key, const std::string &v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty())
    BadValue(key, v, "a non-negative integer");
  return out;
}

double ParseDouble(const std::string &key, const std::string &v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty())
    BadValue(key, v, "a number");
  return out;
}

bool ParseBool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  BadValue(key, v, "true or false");
}

std::string FormatDouble(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, p);
}

template <typename E>
struct EnumName {
  E value;
  const char *name;
};

constexpr EnumName<Preset> kPresets[] = {{Preset::kTiny, "tiny"},
                                         {Preset::kFull, "full"}};
constexpr EnumName<ModelType> kModelTypes[] = {{ModelType::kTdsb, "tdsb"},
                                               {ModelType::kSuperb, "superb"}};
constexpr EnumName<SpeakerEncoderType> kSpkTypes[] = {
    {SpeakerEncoderType::kTcn, "tcn"}, {SpeakerEncoderType::kMhfa, "mhfa"}};
constexpr EnumName<AieFusion> kFusions[] = {{AieFusion::kFpm, "fpm"},
                                            {AieFusion::kUnet, "unet"}};
constexpr EnumName<AieSource> kSources[] = {
    {AieSource::kMultiCnn, "multi_cnn"},
    {AieSource::kMultiCnnPlusTransformer, "multi_cnn_transformer"},
    {AieSource::kSingleCnn, "single_cnn"},
    {AieSource::kTransformerOnly, "transformer"}};

template <typename E, std::size_t N>
const char *NameOf(const EnumName<E> (&table)[N], E value) {
  for (const auto &e : table)
    if (e.value == value) return e.name;
  return "?";
}

template <typename E, std::size_t N>
E Lookup(const EnumName<E> (&table)[N], const std::string &key,
         const std::string &v) {
  std::string options;
  for (const auto &e : table) {
    if (v == e.name) return e.value;
    options += options.empty() ? e.name : std::string(" | ") + e.name;
  }
  BadValue(key, v, options);
}

struct Field {
  std::function<std::string(const RunConfig &)> get;
  std::function<void(RunConfig &, const std::string &, const std::string &)>
      set;
};

template <typename T>
Field IntField(T RunConfig::*section, std::int64_t T::*member) {
  return {[=](const RunConfig &c) { return std::to_string(c.*section.*member); },
          [=](RunConfig &c, const std::string &k, const std::string &v) {
            c.*section.*member = ParseInt(k, v);
          }};
}

template <typename T>
Field Int32Field(T RunConfig::*section, int T::*member) {
  return {[=](const RunConfig &c) { return std::to_string(c.*section.*member); },
          [=](RunConfig &c, const std::string &k, const std::string &v) {
            const auto x = ParseInt(k, v);
            if (x < INT32_MIN || x > INT32_MAX) BadValue(k, v, "a 32-bit int");
            c.*section.*member = static_cast<int>(x);
          }};
}

template <typename T>
Field DoubleField(T RunConfig::*section, double T::*member) {
  return {[=](const RunConfig &c) { return FormatDouble(c.*section.*member); },
          [=](RunConfig &c, const std::string &k, const std::string &v) {
            c.*section.*member = ParseDouble(k, v);
          }};
}

template <typename T>
Field BoolField(T RunConfig::*section, bool T::*member) {
  return {[=](const RunConfig &c) {
            return std::string(c.*section.*member ? "true" : "false");
          },
          [=](RunConfig &c, const std::string &k, const std::string &v) {
            c.*section.*member = ParseBool(k, v);
          }};
}

template <typename T>
Field StringField(T RunConfig::*section, std::string T::*member) {
  return {[=](const RunConfig &c) { return c.*section.*member; },
          [=](RunConfig &c, const std::string &, const std::string &v) {
            c.*section.*member = v;
          }};
}

const std::map<std::string, Field> &Fields() {
  static const std::map<std::string, Field> fields = [] {
    std::map<std::string, Field> f;
    using R = RunConfig;
    f["model.type"] = {
        [](const R &c) { return std::string(NameOf(kModelTypes, c.model)); },
        [](R &c, const std::string &k, const std::string &v) {
          c.model = Lookup(kModelTypes, k, v);
        }};

    f["data.train_manifest"] = StringField(&R::data, &DataSection::train_manifest);
    f["data.dev_manifest"] = StringField(&R::data, &DataSection::dev_manifest);
    f["data.test_manifest"] = StringField(&R::data, &DataSection::test_manifest);
    f["data.sample_rate"] = Int32Field(&R::data, &DataSection::sample_rate);

    f["backbone.preset"] = {
        [](const R &c) { return c.backbone.preset; },
        [](R &c, const std::string &k, const std::string &v) {
          if (v != "tiny" && v != "base") BadValue(k, v, "tiny | base");
          c.backbone.preset = v;
        }};
    f["backbone.checkpoint"] =
        StringField(&R::backbone, &BackboneSection::checkpoint);
    f["backbone.name_map"] = StringField(&R::backbone, &BackboneSection::name_map);
    f["backbone.source_prefix"] =
        StringField(&R::backbone, &BackboneSection::source_prefix);

    f["aie.fusion"] = {
        [](const R &c) { return std::string(NameOf(kFusions, c.aie.fusion)); },
        [](R &c, const std::string &k, const std::string &v) {
          c.aie.fusion = Lookup(kFusions, k, v);
        }};
    f["aie.source"] = {
        [](const R &c) { return std::string(NameOf(kSources, c.aie.source)); },
        [](R &c, const std::string &k, const std::string &v) {
          c.aie.source = Lookup(kSources, k, v);
        }};
    f["aie.target_stride"] = IntField(&R::aie, &AieConfig::target_stride);
    f["aie.channels"] = IntField(&R::aie, &AieConfig::channels);

    f["spk_encoder.type"] = {
        [](const R &c) {
          return std::string(NameOf(kSpkTypes, c.spk_encoder.type));
        },
        [](R &c, const std::string &k, const std::string &v) {
          c.spk_encoder.type = Lookup(kSpkTypes, k, v);
        }};
    f["spk_encoder.embed_dim"] = {
        [](const R &c) { return std::to_string(c.spk_encoder.mhfa.embed_dim); },
        [](R &c, const std::string &k, const std::string &v) {
          c.spk_encoder.mhfa.embed_dim = ParseInt(k, v);
          c.spk_encoder.tcn.embed_dim = c.spk_encoder.mhfa.embed_dim;
        }};
    f["spk_encoder.mhfa_heads"] = {
        [](const R &c) { return std::to_string(c.spk_encoder.mhfa.n_heads); },
        [](R &c, const std::string &k, const std::string &v) {
          c.spk_encoder.mhfa.n_heads = static_cast<int>(ParseInt(k, v));
        }};
    f["spk_encoder.mhfa_key_dim"] = {
        [](const R &c) { return std::to_string(c.spk_encoder.mhfa.key_dim); },
        [](R &c, const std::string &k, const std::string &v) {
          c.spk_encoder.mhfa.key_dim = ParseInt(k, v);
        }};
    f["spk_encoder.mhfa_value_dim"] = {
        [](const R &c) { return std::to_string(c.spk_encoder.mhfa.value_dim); },
        [](R &c, const std::string &k, const std::string &v) {
          c.spk_encoder.mhfa.value_dim = ParseInt(k, v);
        }};
    f["spk_encoder.tcn_channels"] = {
        [](const R &c) { return std::to_string(c.spk_encoder.tcn.channels); },
        [](R &c, const std::string &k, const std::string &v) {
          c.spk_encoder.tcn.channels = ParseInt(k, v);
        }};
    f["spk_encoder.tcn_hidden"] = {
        [](const R &c) { return std::to_string(c.spk_encoder.tcn.hidden); },
        [](R &c, const std::string &k, const std::string &v) {
          c.spk_encoder.tcn.hidden = ParseInt(k, v);
        }};
    f["spk_encoder.tcn_blocks"] = {
        [](const R &c) { return std::to_string(c.spk_encoder.tcn.n_blocks); },
        [](R &c, const std::string &k, const std::string &v) {
          c.spk_encoder.tcn.n_blocks = static_cast<int>(ParseInt(k, v));
        }};

    f["tdsb.enc_filters"] = IntField(&R::tdsb, &TdsbConfig::enc_filters);
    f["tdsb.enc_kernel"] = IntField(&R::tdsb, &TdsbConfig::enc_kernel);
    f["tdsb.enc_stride"] = IntField(&R::tdsb, &TdsbConfig::enc_stride);
    f["tdsb.blocks_per_repeat"] =
        Int32Field(&R::tdsb, &TdsbConfig::blocks_per_repeat);
    f["tdsb.repeats"] = Int32Field(&R::tdsb, &TdsbConfig::repeats);
    f["tdsb.bottleneck"] = IntField(&R::tdsb, &TdsbConfig::bottleneck);
    f["tdsb.hidden"] = IntField(&R::tdsb, &TdsbConfig::hidden);
    f["tdsb.kernel"] = IntField(&R::tdsb, &TdsbConfig::kernel);
    f["tdsb.fuse_ssl"] = BoolField(&R::tdsb, &TdsbConfig::fuse_ssl);
    f["tdsb.mask_fused"] = BoolField(&R::tdsb, &TdsbConfig::mask_fused);

    f["superb.blstm_layers"] = Int32Field(&R::superb, &SuperbConfig::blstm_layers);
    f["superb.blstm_dim"] = IntField(&R::superb, &SuperbConfig::blstm_dim);
    f["superb.spk_dim"] = IntField(&R::superb, &SuperbConfig::spk_dim);
    f["superb.fft_size"] = {
        [](const R &c) { return std::to_string(c.superb.stft.fft_size); },
        [](R &c, const std::string &k, const std::string &v) {
          c.superb.stft.fft_size = ParseInt(k, v);
        }};
    f["superb.window"] = {
        [](const R &c) { return std::to_string(c.superb.stft.window); },
        [](R &c, const std::string &k, const std::string &v) {
          c.superb.stft.window = ParseInt(k, v);
        }};
    f["superb.hop"] = {
        [](const R &c) { return std::to_string(c.superb.stft.hop); },
        [](R &c, const std::string &k, const std::string &v) {
          c.superb.stft.hop = ParseInt(k, v);
        }};

    f["train.lr_main"] = DoubleField(&R::train, &TrainSection::lr_main);
    f["train.lr_finetune"] = DoubleField(&R::train, &TrainSection::lr_finetune);
    f["train.freeze_backbone"] =
        BoolField(&R::train, &TrainSection::freeze_backbone);
    f["train.max_epochs"] = Int32Field(&R::train, &TrainSection::max_epochs);
    f["train.max_steps"] = Int32Field(&R::train, &TrainSection::max_steps);
    f["train.batch_size"] = Int32Field(&R::train, &TrainSection::batch_size);
    f["train.clip_norm"] = DoubleField(&R::train, &TrainSection::clip_norm);
    f["train.seed"] = {
        [](const R &c) { return std::to_string(c.train.seed); },
        [](R &c, const std::string &k, const std::string &v) {
          c.train.seed = ParseUint(k, v);
        }};
    f["train.init_from"] = StringField(&R::train, &TrainSection::init_from);
    f["train.log_every"] = Int32Field(&R::train, &TrainSection::log_every);
    f["train.eval_every"] = Int32Field(&R::train, &TrainSection::eval_every);

    f["eval.sdr_taps"] = Int32Field(&R::eval, &EvalSection::sdr_taps);
    f["eval.stoi_command"] = StringField(&R::eval, &EvalSection::stoi_command);
    f["eval.pesq_command"] = StringField(&R::eval, &EvalSection::pesq_command);
    return f;
  }();
  return fields;
}

void FlattenYaml(const YAML::Node &node, const std::string &prefix,
                 std::vector<std::pair<std::string, std::string>> *out) {
  if (node.IsMap()) {
    for (const auto &kv : node) {
      const auto key = kv.first.as<std::string>();
      FlattenYaml(kv.second, prefix.empty() ? key : prefix + "." + key, out);
    }
  } else if (node.IsScalar()) {
    out->emplace_back(prefix, node.Scalar());
  } else if (node.IsNull()) {
    out->emplace_back(prefix, "");
  } else {
    throw ConfigError(internal::Concat("sequences are not supported (key ",
                                       prefix, ")"));
  }
}

RunConfig Build(const std::vector<std::pair<std::string, std::string>> &kvs) {
  RunConfig cfg = RunConfig::ForPreset(Preset::kTiny);
  for (const auto &[k, v] : kvs)
    if (k == "preset") cfg.Set(k, v);
  for (const auto &[k, v] : kvs)
    if (k != "preset") cfg.Set(k, v);
  cfg.Validate();
  return cfg;
}

}  // namespace

RunConfig RunConfig::ForPreset(Preset preset) {
  RunConfig c;
  c.preset = preset;
  if (preset == Preset::kTiny) {
    c.backbone.preset = "tiny";
    c.tdsb = TdsbConfig::Tiny();
    c.superb = SuperbConfig::Tiny();
    c.aie.channels = 64;
    c.spk_encoder.mhfa = {4, 64, 64, 128};
    c.spk_encoder.tcn.embed_dim = 128;
  } else {
    c.backbone.preset = "base";
    c.tdsb = TdsbConfig::Full();
    c.superb = SuperbConfig::Full();
    c.aie.channels = 256;
    c.spk_encoder.mhfa = MhfaConfig{};
    c.spk_encoder.tcn.channels = 256;
    c.spk_encoder.tcn.hidden = 512;
    c.spk_encoder.tcn.enc_filters = 256;
    c.spk_encoder.tcn.embed_dim = c.spk_encoder.mhfa.embed_dim;
  }
  return c;
}

void RunConfig::Set(const std::string &key, const std::string &value) {
  if (key == "preset") {
    *this = ForPreset(Lookup(kPresets, key, value));
    return;
  }
  auto it = Fields().find(key);
  if (it == Fields().end())
    throw ConfigError(internal::Concat("unknown config key: ", key));
  it->second.set(*this, key, value);
}

std::string RunConfig::Get(const std::string &key) const {
  if (key == "preset") return NameOf(kPresets, preset);
  auto it = Fields().find(key);
  if (it == Fields().end())
    throw ConfigError(internal::Concat("unknown config key: ", key));
  return it->second.get(*this);
}

std::map<std::string, std::string> RunConfig::Flatten() const {
  std::map<std::string, std::string> out;
  out["preset"] = NameOf(kPresets, preset);
  for (const auto &[k, f] : Fields()) out[k] = f.get(*this);
  return out;
}

std::string RunConfig::Hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto &[k, v] : Flatten()) {
    for (unsigned char ch : k + "=" + v + "\n") {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::ToYaml() const {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "preset" << YAML::Value << NameOf(kPresets, preset);
  std::string section;
  for (const auto &[k, v] : Flatten()) {
    if (k == "preset") continue;
    const auto dot = k.find('.');
    const auto sec = k.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << YAML::EndMap;
      out << YAML::Key << sec << YAML::Value << YAML::BeginMap;
      section = sec;
    }
    out << YAML::Key << k.substr(dot + 1) << YAML::Value;
    if (v.empty())
      out << YAML::Null;
    else
      out << v;
  }
  if (!section.empty()) out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

bool RunConfig::NeedsBackbone() const {
  if (model == ModelType::kSuperb) return true;
  return tdsb.fuse_ssl || spk_encoder.type == SpeakerEncoderType::kMhfa;
}

void RunConfig::Validate() const {
  if (!(train.lr_finetune < train.lr_main))
    throw ConfigError(internal::Concat(
        "train.lr_finetune (", train.lr_finetune,
        ") must be smaller than train.lr_main (", train.lr_main, ")"));
  if (train.lr_finetune <= 0)
    throw ConfigError("train.lr_finetune must be positive");
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (train.max_epochs < 1) throw ConfigError("train.max_epochs must be >= 1");
  if (train.eval_every < 1) throw ConfigError("train.eval_every must be >= 1");
  if (train.max_steps < 0) throw ConfigError("train.max_steps must be >= 0");
  if (data.sample_rate <= 0) throw ConfigError("data.sample_rate must be > 0");
  if (spk_encoder.mhfa.embed_dim < 1)
    throw ConfigError("spk_encoder.embed_dim must be >= 1");

  const BackboneConfig bb = MakeBackboneConfig(*this);
  bb.Validate();
  if (model == ModelType::kSuperb) {
    superb.Validate();
    return;
  }
  TdsbConfig t = tdsb;
  t.ssl_channels = aie.channels;
  t.Validate();
  if (!tdsb.fuse_ssl) return;
  if (aie.channels < 1) throw ConfigError("aie.channels must be >= 1");
  if (aie.target_stride != tdsb.enc_stride)
    throw ConfigError(internal::Concat(
        "aie.target_stride (", aie.target_stride,
        ") must equal tdsb.enc_stride (", tdsb.enc_stride, ")"));
  int level = 0;
  for (int j = 1; j <= bb.num_conv_layers(); ++j)
    if (bb.CumulativeStride(j) == aie.target_stride) level = j;
  if (level == 0) {
    std::string strides;
    for (int j = 1; j <= bb.num_conv_layers(); ++j)
      strides += (j > 1 ? ", " : "") + std::to_string(bb.CumulativeStride(j));
    throw ConfigError(internal::Concat("aie.target_stride ", aie.target_stride,
                                       " matches no CNN level (available: ",
                                       strides, ")"));
  }
  if (ReceptiveField(bb, level) != tdsb.enc_kernel)
    throw ConfigError(internal::Concat(
        "tdsb.enc_kernel (", tdsb.enc_kernel,
        ") must equal the receptive field of the matched CNN level (",
        ReceptiveField(bb, level), ") for frame-exact fusion"));
}

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> keys{"preset"};
  for (const auto &kv : Fields()) keys.push_back(kv.first);
  return keys;
}

std::pair<std::string, std::string> ParseAssignment(const std::string &text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError(internal::Concat("expected key=value, got '", text, "'"));
  return {text.substr(0, eq), text.substr(eq + 1)};
}

RunConfig ConfigFromYamlString(const std::string &yaml,
                               const std::vector<std::string> &overrides) {
  std::vector<std::pair<std::string, std::string>> kvs;
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception &e) {
    throw ConfigError(internal::Concat("cannot parse config: ", e.what()));
  }
  if (root.IsDefined() && !root.IsNull()) {
    if (!root.IsMap()) throw ConfigError("config root must be a mapping");
    FlattenYaml(root, "", &kvs);
  }
  for (const auto &o : overrides) kvs.push_back(ParseAssignment(o));
  return Build(kvs);
}

RunConfig LoadConfig(const std::string &path,
                     const std::vector<std::string> &overrides) {
  if (path.empty()) return ConfigFromYamlString("", overrides);
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ConfigFromYamlString(ss.str(), overrides);
}

BackboneConfig MakeBackboneConfig(const RunConfig &cfg) {
  BackboneConfig bb = cfg.backbone.preset == "base"
                          ? BackboneConfig::BaseCompatible()
                          : BackboneConfig::Tiny();
  bb.sample_rate = cfg.data.sample_rate;
  return bb;
}

std::vector<AblationRow> Table2Ablation() {
  using O = std::vector<std::pair<std::string, std::string>>;
  auto ssl = [](const std::string &source, const std::string &fusion) {
    O o{{"model.type", "tdsb"},
        {"spk_encoder.type", "mhfa"},
        {"tdsb.fuse_ssl", "true"},
        {"aie.source", source}};
    if (!fusion.empty()) o.emplace_back("aie.fusion", fusion);
    return o;
  };
  return {
      {"tcn", O{{"model.type", "tdsb"},
                {"spk_encoder.type", "tcn"},
                {"tdsb.fuse_ssl", "false"}}},
      {"mhfa", O{{"model.type", "tdsb"},
                 {"spk_encoder.type", "mhfa"},
                 {"tdsb.fuse_ssl", "false"}}},
      {"mhfa_transformer_wsum", ssl("transformer", "")},
      {"mhfa_single_cnn", ssl("single_cnn", "")},
      {"mhfa_multi_cnn_unet", ssl("multi_cnn", "unet")},
      {"mhfa_multi_cnn_fpm", ssl("multi_cnn", "fpm")},
      {"mhfa_multi_cnn_transformer_unet", ssl("multi_cnn_transformer", "unet")},
      {"mhfa_multi_cnn_transformer_fpm", ssl("multi_cnn_transformer", "fpm")},
  };
}

}  // namespace tse
