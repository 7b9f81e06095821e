#pragma once

#include <string_view>

namespace autoten::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Threshold read once from AUTOTEN_LOG={error,warn,info,debug}; default warn.
Level threshold();
void set_threshold(Level level);

/// Writes "[autoten:<level>] msg" to stderr when level <= threshold().
void write(Level level, std::string_view msg);

inline void error(std::string_view msg) { write(Level::Error, msg); }
inline void warn(std::string_view msg) { write(Level::Warn, msg); }
inline void info(std::string_view msg) { write(Level::Info, msg); }
inline void debug(std::string_view msg) { write(Level::Debug, msg); }

}  // namespace autoten::log
