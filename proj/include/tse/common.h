// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef TSE_COMMON_H_
#define TSE_COMMON_H_

#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace tse {

// Error categories map onto CLI exit codes (see ExitCode()).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int ExitCode() const { return 1; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  int ExitCode() const override { return 2; }
};

class DataError : public Error {
 public:
  using Error::Error;
  int ExitCode() const override { return 3; }
};

class NumericError : public Error {
 public:
  using Error::Error;
  int ExitCode() const override { return 4; }
};

// Shape/contract violations inside the model code.
class ShapeError : public Error {
 public:
  using Error::Error;
};

namespace internal {

template <typename... Args>
std::string Concat(Args &&...args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace internal

enum class LogLevel { kDebug = 0, kInfo = 1, kWarning = 2, kError = 3 };

LogLevel GetLogLevel();
void SetLogLevel(LogLevel level);

template <typename... Args>
void Log(LogLevel level, Args &&...args) {
  if (level < GetLogLevel()) return;
  static const char *kTags[] = {"DEBUG", "INFO", "WARNING", "ERROR"};
  std::cerr << kTags[static_cast<int>(level)] << " "
            << internal::Concat(std::forward<Args>(args)...) << "\n";
}

}  // namespace tse

#define TSE_LOG_INFO(...) ::tse::Log(::tse::LogLevel::kInfo, __VA_ARGS__)
#define TSE_LOG_WARN(...) ::tse::Log(::tse::LogLevel::kWarning, __VA_ARGS__)

#define TSE_CHECK(cond, ...)                                           \
  do {                                                                 \
    if (!(cond))                                                       \
      throw ::tse::ShapeError(::tse::internal::Concat(__VA_ARGS__));   \
  } while (0)

#endif  // TSE_COMMON_H_
