#include "lsqopt/parallel.hpp"

#include <cstdlib>
#include <string>

namespace lsqopt {

std::size_t thread_budget() {
  if (const char* env = std::getenv("LSQOPT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace lsqopt
