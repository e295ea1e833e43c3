#pragma once

#include <cstdio>
#include <cstdlib>
#include <chrono>
#include <random>
#include <stdexcept>
#include <string>

namespace gridrestore {

/// Raised for malformed or inconsistent input files and model data.
/// The message always names the offending element.
class input_error : public std::runtime_error {
public:
  explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised for internal inconsistencies (programming errors surfaced at runtime).
class internal_error : public std::logic_error {
public:
  explicit internal_error(const std::string& what) : std::logic_error(what) {}
};

enum class log_level { off = 0, info = 1, debug = 2 };

inline log_level current_log_level() {
  static log_level lvl = [] {
    const char* env = std::getenv("GRIDRESTORE_LOG");
    if (!env) return log_level::off;
    const std::string v(env);
    if (v == "debug" || v == "2") return log_level::debug;
    if (v == "info" || v == "1") return log_level::info;
    return log_level::off;
  }();
  return lvl;
}

template <class... Args>
void log_info(const char* fmt, Args... args) {
  if (current_log_level() >= log_level::info) {
    std::fprintf(stderr, "[gridrestore] ");
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }
}

template <class... Args>
void log_debug(const char* fmt, Args... args) {
  if (current_log_level() >= log_level::debug) {
    std::fprintf(stderr, "[gridrestore:debug] ");
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }
}

class stopwatch {
public:
  stopwatch() : start_(clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(clock::now() - start_).count();
  }
private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_;
};

using rng_engine = std::mt19937_64;

}  // namespace gridrestore
