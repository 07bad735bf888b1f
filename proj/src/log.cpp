#include "hgb/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace hgb {

namespace {
std::atomic<LogLevel> g_level{LogLevel::Warn};
std::mutex g_mutex;

void emit(LogLevel level, const char* tag, std::string_view msg) {
  if (level < g_level.load()) return;
  std::lock_guard lock(g_mutex);
  std::cerr << '[' << tag << "] " << msg << '\n';
}
}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level.load(); }

void log_debug(std::string_view msg) { emit(LogLevel::Debug, "debug", msg); }
void log_info(std::string_view msg) { emit(LogLevel::Info, "info", msg); }
void log_warn(std::string_view msg) { emit(LogLevel::Warn, "warn", msg); }
void log_error(std::string_view msg) { emit(LogLevel::Error, "error", msg); }

}  // namespace hgb
