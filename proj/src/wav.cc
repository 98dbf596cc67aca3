// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "tse/wav.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "tse/common.h"

namespace tse {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T ReadLe(const char *p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void WriteLe(std::ostream &os, T v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

struct ParsedWav {
  WavInfo info;
  std::streamoff data_offset = 0;
  std::uint32_t data_bytes = 0;
};

ParsedWav Parse(std::ifstream &is, const std::string &path) {
  char riff[12];
  if (!is.read(riff, 12) || std::memcmp(riff, "RIFF", 4) != 0 ||
      std::memcmp(riff + 8, "WAVE", 4) != 0)
    throw DataError("not a RIFF/WAVE file: " + path);

  ParsedWav out;
  bool have_fmt = false;
  std::uint16_t format = 0;
  char hdr[8];
  while (is.read(hdr, 8)) {
    std::uint32_t size = ReadLe<std::uint32_t>(hdr + 4);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      std::vector<char> fmt(size);
      if (size < 16 || !is.read(fmt.data(), size))
        throw DataError("truncated fmt chunk: " + path);
      format = ReadLe<std::uint16_t>(fmt.data());
      out.info.channels = ReadLe<std::uint16_t>(fmt.data() + 2);
      out.info.sample_rate =
          static_cast<int>(ReadLe<std::uint32_t>(fmt.data() + 4));
      out.info.bits_per_sample = ReadLe<std::uint16_t>(fmt.data() + 14);
      if (format == kFormatExtensible && size >= 26)
        format = ReadLe<std::uint16_t>(fmt.data() + 24);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) throw DataError("data chunk before fmt chunk: " + path);
      out.data_offset = is.tellg();
      out.data_bytes = size;
      break;
    } else {
      is.seekg(size + (size & 1), std::ios::cur);
    }
    if (size & 1 && std::memcmp(hdr, "fmt ", 4) == 0)
      is.seekg(1, std::ios::cur);
  }
  if (!have_fmt || out.data_offset == 0)
    throw DataError("missing fmt or data chunk: " + path);

  if (format == kFormatPcm && out.info.bits_per_sample == 16) {
    out.info.is_float = false;
  } else if (format == kFormatFloat && out.info.bits_per_sample == 32) {
    out.info.is_float = true;
  } else {
    throw DataError(internal::Concat("unsupported WAV encoding (format ",
                                     format, ", ", out.info.bits_per_sample,
                                     " bits): ", path));
  }
  if (out.info.channels <= 0)
    throw DataError("invalid channel count: " + path);
  int frame_bytes = out.info.channels * out.info.bits_per_sample / 8;
  out.info.num_frames = out.data_bytes / frame_bytes;
  return out;
}

}  // namespace

WavInfo ReadWavInfo(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  return Parse(is, path).info;
}

Waveform ReadWav(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  ParsedWav p = Parse(is, path);
  if (p.info.channels != 1)
    throw DataError(internal::Concat("expected mono audio, got ",
                                     p.info.channels, " channels: ", path));
  std::size_t n = static_cast<std::size_t>(p.info.num_frames);
  std::vector<char> raw(n * p.info.bits_per_sample / 8);
  is.seekg(p.data_offset);
  if (!is.read(raw.data(), static_cast<std::streamsize>(raw.size())))
    throw DataError("truncated data chunk: " + path);

  Waveform wave;
  wave.sample_rate = p.info.sample_rate;
  wave.samples.resize(n);
  if (p.info.is_float) {
    std::memcpy(wave.samples.data(), raw.data(), raw.size());
  } else {
    for (std::size_t i = 0; i < n; ++i)
      wave.samples[i] = ReadLe<std::int16_t>(raw.data() + 2 * i) / 32768.0f;
  }
  return wave;
}

void WriteWav(const std::string &path, const Waveform &wave,
              SampleFormat format) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path);
  const bool is_float = format == SampleFormat::kFloat32;
  const std::uint16_t bits = is_float ? 32 : 16;
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(wave.samples.size() * bits / 8);

  os.write("RIFF", 4);
  WriteLe<std::uint32_t>(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  WriteLe<std::uint32_t>(os, 16);
  WriteLe<std::uint16_t>(os, is_float ? kFormatFloat : kFormatPcm);
  WriteLe<std::uint16_t>(os, 1);
  WriteLe<std::uint32_t>(os, static_cast<std::uint32_t>(wave.sample_rate));
  WriteLe<std::uint32_t>(os,
                         static_cast<std::uint32_t>(wave.sample_rate) * bits / 8);
  WriteLe<std::uint16_t>(os, bits / 8);
  WriteLe<std::uint16_t>(os, bits);
  os.write("data", 4);
  WriteLe<std::uint32_t>(os, data_bytes);
  if (is_float) {
    os.write(reinterpret_cast<const char *>(wave.samples.data()), data_bytes);
  } else {
    for (float s : wave.samples) {
      float c = std::clamp(s, -1.0f, 32767.0f / 32768.0f);
      WriteLe<std::int16_t>(os,
                            static_cast<std::int16_t>(std::lround(c * 32768.0f)));
    }
  }
  if (!os) throw DataError("write failed: " + path);
}

}  // namespace tse
