#pragma once

// Injectable time sources and environment lookup shared by the I/O modules.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace geoanim {

/// Wall clock in Unix milliseconds.
using Clock = std::function<std::int64_t()>;
/// Blocks the calling thread for the given number of seconds.
using Sleeper = std::function<void(double)>;

std::int64_t system_now_ms();
void real_sleep(double seconds);

inline Clock system_clock() { return system_now_ms; }
inline Clock fixed_clock(std::int64_t ms) {
  return [ms] { return ms; };
}

std::optional<std::string> env(const char* name);
std::string env_or(const char* name, const std::string& fallback);
double env_number_or(const char* name, double fallback);

}  // namespace geoanim
