#pragma once

#include <string>

namespace morphforge {

enum class LogLevel { kQuiet, kWarning, kInfo };

void set_log_level(LogLevel level);
LogLevel log_level();

void log_warning(const std::string& msg);
void log_info(const std::string& msg);

}  // namespace morphforge
