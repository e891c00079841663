#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace gapstat::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

// Level comes from the GAPSTAT_LOG environment variable; defaults to warn.
inline Level threshold() {
    static Level lvl = [] {
        const char* env = std::getenv("GAPSTAT_LOG");
        if (!env) return Level::warn;
        std::string v(env);
        if (v == "debug") return Level::debug;
        if (v == "info") return Level::info;
        if (v == "warn") return Level::warn;
        if (v == "error") return Level::error;
        if (v == "off") return Level::off;
        return Level::warn;
    }();
    return lvl;
}

inline void emit(Level lvl, const char* tag, const std::string& msg) {
    if (lvl < threshold()) return;
    std::cerr << "[gapstat " << tag << "] " << msg << "\n";
}

inline void debug(const std::string& msg) { emit(Level::debug, "debug", msg); }
inline void info(const std::string& msg) { emit(Level::info, "info", msg); }
inline void warn(const std::string& msg) { emit(Level::warn, "warn", msg); }
inline void error(const std::string& msg) { emit(Level::error, "error", msg); }

}  // namespace gapstat::log
