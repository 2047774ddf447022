#include "tsbsde/parallel.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>

namespace tsbsde {

namespace {

std::size_t default_threads() {
  if (const char* env = std::getenv("TSBSDE_THREADS")) {
    try {
      long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::atomic<std::size_t>& threads_setting() {
  static std::atomic<std::size_t> value{default_threads()};
  return value;
}

}  // namespace

std::size_t thread_count() { return threads_setting().load(); }

void set_thread_count(std::size_t n) { threads_setting().store(n == 0 ? default_threads() : n); }

double CounterNormal::uniform(std::uint64_t path, std::uint64_t step, std::uint64_t dim, std::uint64_t lane) const {
  std::uint64_t h = mix(key_ ^ mix(path + 0x3c6ef372fe94f82bULL));
  h = mix(h ^ mix(step * 0x100000001b3ULL + dim));
  h = mix(h ^ lane);
  // 53 random bits mapped to the open interval (0, 1).
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

double CounterNormal::operator()(std::uint64_t path, std::uint64_t step, std::uint64_t dim) const {
  const double u1 = uniform(path, step, dim, 0);
  const double u2 = uniform(path, step, dim, 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace tsbsde
