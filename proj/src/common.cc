// Copyright 2026 The tse-ssl Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "tse/common.h"

#include <atomic>

namespace tse {

namespace {
std::atomic<LogLevel> g_log_level{LogLevel::kInfo};
}  // namespace

LogLevel GetLogLevel() { return g_log_level.load(); }
void SetLogLevel(LogLevel level) { g_log_level.store(level); }

}  // namespace tse
