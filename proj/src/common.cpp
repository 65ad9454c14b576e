#include "tensekit/common.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace tensekit {

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

int log_level() {
  static int level = [] {
    const char* env = std::getenv("TENSEKIT_LOG");
    if (!env) return 0;
    if (std::strcmp(env, "debug") == 0) return 2;
    if (std::strcmp(env, "info") == 0) return 1;
    return 0;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::fprintf(stderr, "[tensekit] %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::fprintf(stderr, "[tensekit] %s\n", msg.c_str());
}

std::string format_double(double v) {
  char buf[40];
  // try successively longer precision until the value round-trips
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace tensekit
