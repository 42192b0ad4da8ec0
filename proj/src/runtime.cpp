#include "geoanim/runtime.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "geoanim/errors.hpp"

namespace geoanim {

std::int64_t system_now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

void real_sleep(double seconds) {
  if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

std::string env_or(const char* name, const std::string& fallback) { return env(name).value_or(fallback); }

double env_number_or(const char* name, double fallback) {
  auto v = env(name);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument(*v);
    return d;
  } catch (const std::exception&) {
    throw ValidationError(std::string("environment variable ") + name + " is not a number: " + *v);
  }
}

}  // namespace geoanim
