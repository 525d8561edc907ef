#include "archgen/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace archgen::log {

namespace {
std::atomic<Level> g_level{Level::Warn};
std::mutex g_mu;
constexpr const char* kNames[] = {"debug", "info", "warn", "error", "off"};
}  // namespace

void set_level(Level l) noexcept { g_level = l; }
Level level() noexcept { return g_level; }

void write(Level l, std::string_view component, std::string_view message) {
  if (l < g_level.load()) return;
  std::lock_guard lock(g_mu);
  std::cerr << '[' << kNames[static_cast<int>(l)] << "] " << component << ": " << message << '\n';
}

}  // namespace archgen::log
