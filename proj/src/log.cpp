#include "log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace kms::log {

namespace {

Level parse_level(const char* text) {
  if (text == nullptr) return Level::warn;
  const std::string_view v(text);
  if (v == "error") return Level::error;
  if (v == "info") return Level::info;
  if (v == "debug") return Level::debug;
  return Level::warn;
}

constexpr std::string_view label(Level level) {
  switch (level) {
    case Level::error: return "error";
    case Level::warn: return "warn";
    case Level::info: return "info";
    case Level::debug: return "debug";
  }
  return "?";
}

}  // namespace

Level threshold() {
  static const Level level = parse_level(std::getenv("KMS_LOG"));
  return level;
}

bool enabled(Level level) { return static_cast<int>(level) <= static_cast<int>(threshold()); }

void write(Level level, std::string_view message) {
  if (!enabled(level)) return;
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  std::cerr << "[kms " << label(level) << "] " << message << '\n';
}

}  // namespace kms::log
