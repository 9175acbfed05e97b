#include "evver/log.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <mutex>

namespace evver::log {
namespace {

std::atomic<Level> g_level{Level::info};
std::mutex g_mutex;

const char* level_name(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
  }
  return "info";
}

}  // namespace

void set_level(Level level) { g_level = level; }

void write(Level level, std::string_view message, const nlohmann::json& fields) {
  if (level < g_level.load()) return;
  nlohmann::json line = fields.is_object() ? fields : nlohmann::json::object();
  auto now = std::chrono::system_clock::now().time_since_epoch();
  line["ts"] = std::chrono::duration<double>(now).count();
  line["level"] = level_name(level);
  line["msg"] = message;
  std::string text = line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  std::lock_guard lock(g_mutex);
  std::fprintf(stderr, "%s\n", text.c_str());
}

}  // namespace evver::log
