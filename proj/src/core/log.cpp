#include "morphforge/core/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace morphforge {
namespace {

std::atomic<LogLevel> g_level{LogLevel::kWarning};
std::mutex g_mutex;

}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log_warning(const std::string& msg) {
  if (g_level < LogLevel::kWarning) return;
  std::lock_guard lock(g_mutex);
  std::clog << "warning: " << msg << '\n';
}

void log_info(const std::string& msg) {
  if (g_level < LogLevel::kInfo) return;
  std::lock_guard lock(g_mutex);
  std::clog << msg << '\n';
}

}  // namespace morphforge
