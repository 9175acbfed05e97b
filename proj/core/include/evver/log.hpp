#pragma once

#include <string_view>

#include <nlohmann/json.hpp>

namespace evver::log {

enum class Level { debug, info, warn, error };

/// Minimum level written; defaults to info.
void set_level(Level level);

/// Writes one JSON object per line to stderr:
/// {"ts":..., "level":..., "msg":..., <fields>}.
void write(Level level, std::string_view message, const nlohmann::json& fields = {});

inline void debug(std::string_view m, const nlohmann::json& f = {}) { write(Level::debug, m, f); }
inline void info(std::string_view m, const nlohmann::json& f = {}) { write(Level::info, m, f); }
inline void warn(std::string_view m, const nlohmann::json& f = {}) { write(Level::warn, m, f); }
inline void error(std::string_view m, const nlohmann::json& f = {}) { write(Level::error, m, f); }

}  // namespace evver::log
