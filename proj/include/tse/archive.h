// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Flat tensor-name -> float32 array archive used for every checkpoint.
//
// Layout (little endian):
//   "TSEARC01"
//   u32 n_meta,    n_meta   x { str key, str value }
//   u32 n_tensor,  n_tensor x { str name, u32 ndim, i64 dims[ndim],
//                               f32 data[prod(dims)] }
// where str is { u32 length, bytes }.

#ifndef TSE_ARCHIVE_H_
#define TSE_ARCHIVE_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tse {

struct ArchiveTensor {
  std::vector<std::int64_t> shape;
  std::vector<float> data;

  std::int64_t numel() const;
};

struct TensorArchive {
  std::map<std::string, std::string> metadata;
  std::map<std::string, ArchiveTensor> tensors;

  void Save(const std::string &path) const;
  static TensorArchive Load(const std::string &path);
};

std::string ShapeString(const std::vector<std::int64_t> &shape);

// `source_name -> target_name` per line; blank lines and '#' comments are
// ignored. Throws DataError on malformed lines or duplicate sources.
std::map<std::string, std::string> ReadNameMap(const std::string &path);

}  // namespace tse

#endif  // TSE_ARCHIVE_H_
