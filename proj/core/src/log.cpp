#include "amopt/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace amopt {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("AMOPT_LOG");
    if (!env) return LogLevel::Info;
    if (std::strcmp(env, "quiet") == 0) return LogLevel::Quiet;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::fprintf(stderr, "[amopt] %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::Debug) std::fprintf(stderr, "[amopt:debug] %s\n", msg.c_str());
}

}  // namespace amopt
