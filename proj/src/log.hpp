#pragma once

#include <string_view>

namespace kms::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

// Threshold is read once from the KMS_LOG environment variable
// (error|warn|info|debug); default is warn.
Level threshold();
bool enabled(Level level);
void write(Level level, std::string_view message);

inline void warn(std::string_view m) { write(Level::warn, m); }
inline void info(std::string_view m) { write(Level::info, m); }
inline void debug(std::string_view m) { write(Level::debug, m); }

}  // namespace kms::log
