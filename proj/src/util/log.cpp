#include "milnli/util/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace milnli::log {
namespace {

Level initial_level() {
  const char* env = std::getenv("MILNLI_LOG");
  if (!env) return Level::kInfo;
  const std::string v = env;
  if (v == "debug") return Level::kDebug;
  if (v == "warning") return Level::kWarning;
  if (v == "error") return Level::kError;
  if (v == "silent") return Level::kSilent;
  return Level::kInfo;
}

std::atomic<Level>& current() {
  static std::atomic<Level> level{initial_level()};
  return level;
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

const char* tag(Level level) {
  switch (level) {
    case Level::kDebug: return "D";
    case Level::kInfo: return "I";
    case Level::kWarning: return "W";
    case Level::kError: return "E";
    case Level::kSilent: break;
  }
  return "?";
}

}  // namespace

void set_level(Level level) { current() = level; }
Level level() { return current(); }

void write(Level level, std::string_view message) {
  if (level < current() || level == Level::kSilent) return;
  std::lock_guard lock(sink_mutex());
  std::cerr << '[' << tag(level) << "] " << message << '\n';
}

}  // namespace milnli::log
