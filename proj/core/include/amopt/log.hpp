#pragma once

#include <string>

namespace amopt {

/// Verbosity from the AMOPT_LOG environment variable: quiet, info (default)
/// or debug.
enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace amopt
