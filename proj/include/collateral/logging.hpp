#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace collateral {

enum class LogLevel { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3, kNone = 4 };

/// Process-wide log level, initialised once from COLLATERAL_LOG
/// (debug|info|warn|error|none). Defaults to warn.
inline LogLevel& log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("COLLATERAL_LOG");
        if (env == nullptr) return LogLevel::kWarn;
        const std::string v(env);
        if (v == "debug") return LogLevel::kDebug;
        if (v == "info") return LogLevel::kInfo;
        if (v == "warn") return LogLevel::kWarn;
        if (v == "error") return LogLevel::kError;
        if (v == "none") return LogLevel::kNone;
        return LogLevel::kWarn;
    }();
    return level;
}

inline void log_message(LogLevel level, const char* tag, const std::string& msg) {
    if (level < log_level()) return;
    std::fprintf(stderr, "collateral %s: %s\n", tag, msg.c_str());
}

inline void log_debug(const std::string& msg) { log_message(LogLevel::kDebug, "debug", msg); }
inline void log_info(const std::string& msg) { log_message(LogLevel::kInfo, "info", msg); }
inline void log_warn(const std::string& msg) { log_message(LogLevel::kWarn, "warning", msg); }
inline void log_error(const std::string& msg) { log_message(LogLevel::kError, "error", msg); }

}  // namespace collateral
