#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace sgforge {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline std::optional<LogLevel> parse_log_level(std::string_view s) {
  if (s == "debug") return LogLevel::debug;
  if (s == "info") return LogLevel::info;
  if (s == "warn") return LogLevel::warn;
  if (s == "error") return LogLevel::error;
  if (s == "off") return LogLevel::off;
  return std::nullopt;
}

namespace detail {
inline std::atomic<int>& log_threshold() {
  static std::atomic<int> level{static_cast<int>(LogLevel::warn)};
  return level;
}
}  // namespace detail

inline void set_log_level(LogLevel level) { detail::log_threshold().store(static_cast<int>(level)); }

inline void log_message(LogLevel level, std::string_view message) {
  if (static_cast<int>(level) < detail::log_threshold().load()) return;
  static std::mutex mu;
  static constexpr std::string_view kNames[] = {"debug", "info", "warn", "error"};
  std::lock_guard lock(mu);
  std::cerr << "sgforge: " << kNames[static_cast<int>(level)] << ": " << message << '\n';
}

}  // namespace sgforge
