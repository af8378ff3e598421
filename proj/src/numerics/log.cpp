#include "stgin/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace stgin {

namespace {
std::atomic<bool> quiet{false};
std::mutex log_mutex;
}  // namespace

void set_log_quiet(bool value) { quiet = value; }

void log_info(std::string_view message) {
  if (quiet) return;
  std::lock_guard<std::mutex> lock(log_mutex);
  std::clog << message << '\n';
}

void log_warning(std::string_view message) {
  std::lock_guard<std::mutex> lock(log_mutex);
  std::clog << "warning: " << message << '\n';
}

}  // namespace stgin
