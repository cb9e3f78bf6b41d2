#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace isochk {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline LogLevel log_level() {
    static LogLevel lvl = [] {
        const char* env = std::getenv("ISOCHK_LOG");
        if (!env) return LogLevel::Warn;
        if (!std::strcmp(env, "error")) return LogLevel::Error;
        if (!std::strcmp(env, "warn")) return LogLevel::Warn;
        if (!std::strcmp(env, "info")) return LogLevel::Info;
        if (!std::strcmp(env, "debug")) return LogLevel::Debug;
        return LogLevel::Warn;
    }();
    return lvl;
}

template <typename... Args>
void logf(LogLevel lvl, const char* fmt, Args... args) {
    if (lvl > log_level()) return;
    const char* tag = lvl == LogLevel::Error  ? "error"
                      : lvl == LogLevel::Warn ? "warn"
                      : lvl == LogLevel::Info ? "info"
                                              : "debug";
    std::fprintf(stderr, "[isochk:%s] ", tag);
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
}

inline void logf(LogLevel lvl, const char* msg) { logf(lvl, "%s", msg); }

}  // namespace isochk
