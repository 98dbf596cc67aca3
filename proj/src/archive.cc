// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "tse/archive.h"

#include <algorithm>
#include <fstream>
#include <functional>
#include <numeric>

#include "tse/common.h"

namespace tse {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'E', 'A', 'R', 'C', '0', '1'};

template <typename T>
void Put(std::ostream &os, T v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

void PutString(std::ostream &os, const std::string &s) {
  Put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  Reader(std::istream &is, const std::string &path) : is_(is), path_(path) {}

  template <typename T>
  T Get() {
    T v;
    Read(reinterpret_cast<char *>(&v), sizeof(T));
    return v;
  }

  std::string GetString() {
    std::uint32_t n = Get<std::uint32_t>();
    if (n > (1u << 30)) throw DataError("corrupt archive string in " + path_);
    std::string s(n, '\0');
    Read(s.data(), n);
    return s;
  }

  void Read(char *dst, std::size_t n) {
    if (!is_.read(dst, static_cast<std::streamsize>(n)))
      throw DataError("truncated archive: " + path_);
  }

 private:
  std::istream &is_;
  const std::string &path_;
};

std::string Trim(const std::string &s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::int64_t ArchiveTensor::numel() const {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1},
                         std::multiplies<>());
}

void TensorArchive::Save(const std::string &path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write archive " + path);
  os.write(kMagic, sizeof(kMagic));
  Put<std::uint32_t>(os, static_cast<std::uint32_t>(metadata.size()));
  for (const auto &[k, v] : metadata) {
    PutString(os, k);
    PutString(os, v);
  }
  Put<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto &[name, t] : tensors) {
    if (t.numel() != static_cast<std::int64_t>(t.data.size()))
      throw DataError("tensor " + name + " data does not match its shape");
    PutString(os, name);
    Put<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) Put<std::int64_t>(os, d);
    os.write(reinterpret_cast<const char *>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!os) throw DataError("write failed: " + path);
}

TensorArchive TensorArchive::Load(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open archive " + path);
  Reader r(is, path);
  char magic[8];
  r.Read(magic, 8);
  if (!std::equal(magic, magic + 8, kMagic))
    throw DataError("not a tensor archive: " + path);
  TensorArchive a;
  std::uint32_t n_meta = r.Get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.GetString();
    a.metadata[k] = r.GetString();
  }
  std::uint32_t n = r.Get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.GetString();
    ArchiveTensor t;
    std::uint32_t ndim = r.Get<std::uint32_t>();
    if (ndim > 8) throw DataError("corrupt tensor rank for " + name);
    for (std::uint32_t d = 0; d < ndim; ++d) {
      std::int64_t dim = r.Get<std::int64_t>();
      if (dim < 0) throw DataError("negative dimension for " + name);
      t.shape.push_back(dim);
    }
    t.data.resize(static_cast<std::size_t>(t.numel()));
    r.Read(reinterpret_cast<char *>(t.data.data()),
           t.data.size() * sizeof(float));
    a.tensors.emplace(std::move(name), std::move(t));
  }
  return a;
}

std::string ShapeString(const std::vector<std::int64_t> &shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::map<std::string, std::string> ReadNameMap(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open name map " + path);
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    auto arrow = line.find("->");
    if (arrow == std::string::npos)
      throw DataError(internal::Concat(path, ":", lineno,
                                       ": expected 'source -> target'"));
    std::string src = Trim(line.substr(0, arrow));
    std::string dst = Trim(line.substr(arrow + 2));
    if (src.empty() || dst.empty())
      throw DataError(internal::Concat(path, ":", lineno, ": empty name"));
    if (!out.emplace(src, dst).second)
      throw DataError(internal::Concat(path, ":", lineno,
                                       ": duplicate source ", src));
  }
  return out;
}

}  // namespace tse
