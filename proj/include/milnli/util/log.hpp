#pragma once

#include <string_view>

namespace milnli::log {

enum class Level { kDebug = 0, kInfo = 1, kWarning = 2, kError = 3, kSilent = 4 };

/// Messages below `level` are dropped. Defaults to kInfo, or the value of the
/// MILNLI_LOG environment variable (debug|info|warning|error|silent).
void set_level(Level level);
Level level();

void write(Level level, std::string_view message);
inline void debug(std::string_view m) { write(Level::kDebug, m); }
inline void info(std::string_view m) { write(Level::kInfo, m); }
inline void warning(std::string_view m) { write(Level::kWarning, m); }
inline void error(std::string_view m) { write(Level::kError, m); }

}  // namespace milnli::log
