#pragma once

#include <string_view>

namespace archgen::log {

enum class Level { Debug = 0, Info, Warn, Error, Off };

void set_level(Level level) noexcept;
Level level() noexcept;

/// Thread-safe line write to stderr when level >= the configured threshold.
void write(Level level, std::string_view component, std::string_view message);

inline void debug(std::string_view c, std::string_view m) { write(Level::Debug, c, m); }
inline void info(std::string_view c, std::string_view m) { write(Level::Info, c, m); }
inline void warn(std::string_view c, std::string_view m) { write(Level::Warn, c, m); }

}  // namespace archgen::log
