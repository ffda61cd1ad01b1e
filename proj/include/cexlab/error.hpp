#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace cexlab {

// Domain / internal failure: maps to process exit code 1 at the CLI boundary.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad user input (flag values, malformed files): exit code 2 at the CLI.
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(what);
}

// Lightweight leveled logging controlled by the CEXLAB_LOG environment
// variable (error|info|debug, default error). Messages go to stderr.
enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level();
void log_line(LogLevel level, const std::string& msg);

inline void log_info(const std::string& msg) { log_line(LogLevel::kInfo, msg); }
inline void log_debug(const std::string& msg) { log_line(LogLevel::kDebug, msg); }

}  // namespace cexlab
