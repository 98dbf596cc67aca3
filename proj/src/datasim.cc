// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "tse/datasim.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tse/common.h"

namespace fs = std::filesystem;

namespace tse {

namespace {

const char kCsvHeader[] =
    "mixture_path,source1_path,source2_path,speaker1,speaker2,"
    "enrollment_path,target_index";

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// std::uniform_*_distribution is implementation-defined, so index and real
// draws are derived from raw mt19937_64 output to keep manifests portable.
class RowRng {
 public:
  RowRng(std::uint64_t seed, Split split, int row)
      : gen_(SplitMix64(SplitMix64(seed) ^
                        SplitMix64((static_cast<std::uint64_t>(split) << 32) |
                                   static_cast<std::uint32_t>(row)))) {}

  std::size_t Index(std::size_t n) { return gen_() % n; }

  double Uniform(double lo, double hi) {
    double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

 private:
  std::mt19937_64 gen_;
};

std::vector<std::string> SplitCsvLine(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

ScanResult ScanCorpus(const std::string &dir, double min_duration,
                      int sample_rate) {
  if (!fs::is_directory(dir))
    throw DataError("corpus directory does not exist: " + dir);
  ScanResult result;
  std::vector<fs::path> files;
  for (const auto &spk : fs::directory_iterator(dir)) {
    if (!spk.is_directory()) continue;
    for (const auto &f : fs::directory_iterator(spk.path())) {
      if (f.is_regular_file() && f.path().extension() == ".wav")
        files.push_back(f.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto &f : files) {
    WavInfo info;
    try {
      info = ReadWavInfo(f.string());
    } catch (const DataError &e) {
      TSE_LOG_WARN("skipping ", f.string(), ": ", e.what());
      ++result.skipped;
      continue;
    }
    if (info.channels != 1 || info.sample_rate != sample_rate) {
      TSE_LOG_WARN("skipping ", f.string(), ": ", info.channels, " channels @ ",
                   info.sample_rate, " Hz");
      ++result.skipped;
      continue;
    }
    double duration = static_cast<double>(info.num_frames) / info.sample_rate;
    if (duration <= 0.0 || duration < min_duration) continue;
    result.utterances.push_back({f.string(),
                                 f.parent_path().filename().string(), duration,
                                 info.sample_rate});
  }
  if (result.skipped > 0)
    TSE_LOG_WARN(result.skipped, " file(s) skipped while scanning ", dir);
  if (result.utterances.empty())
    throw DataError("no utterances found in " + dir);
  return result;
}

std::string SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

Split ParseSplit(const std::string &name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + name + "' (train|dev|test)");
}

std::string Manifest::Resolve(const std::string &path) const {
  fs::path p(path);
  if (p.is_absolute() || root.empty()) return path;
  return (fs::path(root) / p).string();
}

Manifest BuildManifest(const std::vector<Utterance> &utterances,
                       std::uint64_t seed, int n_mixtures, Split split,
                       const GainPolicy &gains) {
  std::map<std::string, std::vector<const Utterance *>> by_speaker;
  for (const auto &u : utterances) by_speaker[u.speaker_id].push_back(&u);
  if (by_speaker.size() < 2) throw DataError("need ≥2 speakers");

  std::vector<std::string> speakers, targets;
  for (auto &[spk, list] : by_speaker) {
    std::sort(list.begin(), list.end(),
              [](const Utterance *a, const Utterance *b) {
                return a->path < b->path;
              });
    speakers.push_back(spk);
    if (list.size() >= 2) targets.push_back(spk);
  }
  if (targets.empty())
    throw DataError(
        "no speaker has ≥2 utterances; cannot pick a disjoint enrollment");
  if (n_mixtures <= 0) throw DataError("n_mixtures must be positive");

  Manifest m;
  m.seed = seed;
  m.split = split;
  m.gains = gains;
  const std::string tag = SplitName(split);
  for (int row = 0; row < n_mixtures; ++row) {
    RowRng rng(seed, split, row);
    const std::string &target = targets[rng.Index(targets.size())];
    std::string other;
    do {
      other = speakers[rng.Index(speakers.size())];
    } while (other == target);

    const auto &target_utts = by_speaker[target];
    std::size_t src = rng.Index(target_utts.size());
    std::size_t enr = rng.Index(target_utts.size() - 1);
    if (enr >= src) ++enr;
    const auto &other_utts = by_speaker[other];
    const Utterance *interferer = other_utts[rng.Index(other_utts.size())];

    MixtureSample s;
    std::ostringstream id;
    id << tag << "_" << std::setw(5) << std::setfill('0') << row;
    s.id = id.str();
    s.target_index = row % 2;
    int ti = s.target_index, oi = 1 - s.target_index;
    s.speaker_ids[ti] = target;
    s.speaker_ids[oi] = other;
    s.source_utterances[ti] = target_utts[src]->path;
    s.source_utterances[oi] = interferer->path;
    s.enrollment_path = target_utts[enr]->path;
    for (int k = 0; k < 2; ++k) {
      s.gains_db[k] = gains.jitter_db > 0.0
                          ? rng.Uniform(-gains.jitter_db, gains.jitter_db)
                          : 0.0;
    }
    s.mixture_path = "mix/" + s.id + ".wav";
    s.source_paths = {"s1/" + s.id + ".wav", "s2/" + s.id + ".wav"};
    m.rows.push_back(std::move(s));
  }
  return m;
}

MixResult Mix(const Waveform &a, const Waveform &b, double gain_db_a,
              double gain_db_b) {
  if (a.sample_rate != b.sample_rate)
    throw DataError(internal::Concat("sample-rate mismatch: ", a.sample_rate,
                                     " vs ", b.sample_rate));
  const std::size_t n = std::min(a.size(), b.size());
  const double ga = std::pow(10.0, gain_db_a / 20.0);
  const double gb = std::pow(10.0, gain_db_b / 20.0);

  MixResult r;
  for (auto *w : {&r.mixture, &r.references[0], &r.references[1]}) {
    w->sample_rate = a.sample_rate;
    w->samples.resize(n);
  }
  double peak = 0.0;
  std::vector<double> mix(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sa = ga * a.samples[i], sb = gb * b.samples[i];
    mix[i] = sa + sb;
    peak = std::max(peak, std::abs(mix[i]));
  }
  r.scale = peak > 1.0 ? kPeakLimit / peak : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    float sa = static_cast<float>(r.scale * ga * a.samples[i]);
    float sb = static_cast<float>(r.scale * gb * b.samples[i]);
    r.references[0].samples[i] = sa;
    r.references[1].samples[i] = sb;
    r.mixture.samples[i] = sa + sb;
  }
  return r;
}

void Materialize(Manifest *manifest, const std::string &out_dir) {
  for (const char *sub : {"mix", "s1", "s2"})
    fs::create_directories(fs::path(out_dir) / sub);
  manifest->root = fs::absolute(out_dir).string();
  for (auto &row : manifest->rows) {
    Waveform a = ReadWav(row.source_utterances[0]);
    Waveform b = ReadWav(row.source_utterances[1]);
    MixResult r = Mix(a, b, row.gains_db[0], row.gains_db[1]);
    row.scale = r.scale;
    WriteWav(manifest->Resolve(row.mixture_path), r.mixture);
    WriteWav(manifest->Resolve(row.source_paths[0]), r.references[0]);
    WriteWav(manifest->Resolve(row.source_paths[1]), r.references[1]);
  }
  WriteManifestCsv(*manifest, (fs::path(out_dir) / "manifest.csv").string());
  WriteManifestJson(*manifest, (fs::path(out_dir) / "manifest.json").string());
}

void WriteManifestCsv(const Manifest &manifest, const std::string &path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  os << kCsvHeader << "\n";
  for (const auto &r : manifest.rows) {
    for (const auto *f : {&r.mixture_path, &r.source_paths[0],
                          &r.source_paths[1], &r.enrollment_path}) {
      if (f->find(',') != std::string::npos)
        throw DataError("path contains a comma: " + *f);
    }
    os << r.mixture_path << "," << r.source_paths[0] << ","
       << r.source_paths[1] << "," << r.speaker_ids[0] << ","
       << r.speaker_ids[1] << "," << r.enrollment_path << ","
       << r.target_index << "\n";
  }
}

void WriteManifestJson(const Manifest &manifest, const std::string &path) {
  nlohmann::ordered_json j;
  j["seed"] = manifest.seed;
  j["split"] = SplitName(manifest.split);
  j["gain_policy"] = {{"mode", manifest.gains.jitter_db > 0.0
                                   ? "uniform_jitter"
                                   : "fixed_0db"},
                      {"jitter_db", manifest.gains.jitter_db}};
  j["length_mode"] = "min";
  j["peak_limit"] = kPeakLimit;
  auto rows = nlohmann::ordered_json::array();
  for (const auto &r : manifest.rows) {
    rows.push_back({{"id", r.id},
                    {"source_utterances", r.source_utterances},
                    {"gains_db", r.gains_db},
                    {"scale", r.scale}});
  }
  j["rows"] = std::move(rows);
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  os << j.dump(2) << "\n";
}

Manifest ReadManifestCsv(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open manifest " + path);
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader)
    throw DataError("unexpected manifest header in " + path);
  Manifest m;
  m.root = fs::absolute(fs::path(path)).parent_path().string();
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = SplitCsvLine(line);
    if (f.size() != 7)
      throw DataError(internal::Concat(path, ":", lineno, ": expected 7 fields"));
    MixtureSample s;
    s.mixture_path = f[0];
    s.source_paths = {f[1], f[2]};
    s.speaker_ids = {f[3], f[4]};
    s.enrollment_path = f[5];
    if (f[6] != "0" && f[6] != "1")
      throw DataError(internal::Concat(path, ":", lineno, ": bad target_index"));
    s.target_index = f[6] == "1";
    s.id = fs::path(s.mixture_path).stem().string();
    m.rows.push_back(std::move(s));
  }
  if (m.rows.empty()) throw DataError("empty manifest: " + path);
  // The sidecar carries seed/split; it is optional for consumers.
  fs::path sidecar = fs::path(path).parent_path() / "manifest.json";
  if (fs::exists(sidecar)) {
    std::ifstream js(sidecar);
    auto j = nlohmann::json::parse(js, nullptr, false);
    if (!j.is_discarded() && j.contains("seed")) {
      m.seed = j["seed"].get<std::uint64_t>();
      m.split = ParseSplit(j.value("split", "train"));
      m.gains.jitter_db = j["gain_policy"].value("jitter_db", 0.0);
      if (j.contains("rows") && j["rows"].size() == m.rows.size()) {
        for (std::size_t i = 0; i < m.rows.size(); ++i) {
          const auto &r = j["rows"][i];
          m.rows[i].source_utterances =
              r["source_utterances"].get<std::array<std::string, 2>>();
          m.rows[i].gains_db = r["gains_db"].get<std::array<double, 2>>();
          m.rows[i].scale = r["scale"].get<double>();
        }
      }
    }
  }
  return m;
}

void CheckManifest(const Manifest &manifest) {
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    const auto &r = manifest.rows[i];
    auto fail = [&](const std::string &what) {
      throw DataError(internal::Concat("manifest row ", i, " (", r.id,
                                       "): ", what));
    };
    if (r.speaker_ids[0] == r.speaker_ids[1]) fail("same speaker twice");
    if (r.target_index != 0 && r.target_index != 1) fail("bad target_index");
    if (r.enrollment_path == r.source_paths[0] ||
        r.enrollment_path == r.source_paths[1])
      fail("enrollment is one of the mixture sources");
    if (!r.source_utterances[r.target_index].empty() &&
        r.enrollment_path == r.source_utterances[r.target_index])
      fail("enrollment equals the in-mixture target utterance");
    if (!r.source_utterances[r.target_index].empty()) {
      fs::path enr(r.enrollment_path);
      if (enr.parent_path().filename().string() != r.TargetSpeaker())
        fail("enrollment speaker differs from target speaker");
    }
  }
}

}  // namespace tse
