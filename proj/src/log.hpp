#pragma once

#include <functional>
#include <string>

namespace negscope::log {

enum class Level { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3, kOff = 4 };

using Sink = std::function<void(Level, const std::string&)>;

// Messages below the threshold are dropped. Default: kInfo to stderr.
void set_level(Level level);
Level level();

// Replaces the process-wide sink; passing an empty function restores stderr.
void set_sink(Sink sink);

void write(Level level, const std::string& msg);

inline void debug(const std::string& msg) { write(Level::kDebug, msg); }
inline void info(const std::string& msg) { write(Level::kInfo, msg); }
inline void warn(const std::string& msg) { write(Level::kWarn, msg); }
inline void error(const std::string& msg) { write(Level::kError, msg); }

}  // namespace negscope::log
