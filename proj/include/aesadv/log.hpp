#pragma once

#include <string_view>

namespace aesadv::log {

enum class Level { kQuiet = 0, kWarn = 1, kInfo = 2 };

void set_level(Level level);
Level level();

// Thread-safe, one line per call, written to stderr.
void warn(std::string_view message);
void info(std::string_view message);

}  // namespace aesadv::log
