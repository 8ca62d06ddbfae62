#include "brainhgt/common.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <thread>

namespace brainhgt {

LogLevel log_level() {
  static const LogLevel lvl = [] {
    const char* env = std::getenv("BRAINHGT_LOG");
    if (!env) return LogLevel::warn;
    if (!std::strcmp(env, "debug")) return LogLevel::debug;
    if (!std::strcmp(env, "info")) return LogLevel::info;
    if (!std::strcmp(env, "warn")) return LogLevel::warn;
    if (!std::strcmp(env, "error")) return LogLevel::error;
    if (!std::strcmp(env, "off")) return LogLevel::off;
    return LogLevel::warn;
  }();
  return lvl;
}

void log_msg(LogLevel lvl, const std::string& msg) {
  if (lvl < log_level()) return;
  static const char* names[] = {"debug", "info", "warn", "error"};
  std::fprintf(stderr, "[brainhgt:%s] %s\n", names[static_cast<int>(lvl)], msg.c_str());
}

uint64_t fnv1a(const void* data, size_t len, uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::atomic<int> cursor{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = cursor.fetch_add(1);
        if (i >= n) break;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace brainhgt
