// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/common/log.h"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace slmrec {
namespace {

std::atomic<int> g_level{static_cast<int>(LogLevel::kInfo)};
std::atomic<std::uint64_t> g_warnings{0};
std::mutex g_mutex;

const char* level_tag(LogLevel level) {
  switch (level) {
    case LogLevel::kDebug:
      return "D";
    case LogLevel::kInfo:
      return "I";
    case LogLevel::kWarn:
      return "W";
    case LogLevel::kError:
      return "E";
    default:
      return "?";
  }
}

}  // namespace

void set_log_level(LogLevel level) { g_level = static_cast<int>(level); }

LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

std::uint64_t warning_count() { return g_warnings.load(); }

void log_message(LogLevel level, std::string_view message) {
  if (level == LogLevel::kWarn) {
    ++g_warnings;
  }
  if (static_cast<int>(level) < g_level.load()) {
    return;
  }
  std::lock_guard<std::mutex> lock(g_mutex);
  std::fprintf(stderr, "[%s] %.*s\n", level_tag(level),
               static_cast<int>(message.size()), message.data());
}

}  // namespace slmrec
