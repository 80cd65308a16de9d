#include "qfeat/parallel.hpp"

#include <omp.h>

#include <atomic>
#include <cstdlib>
#include <string>

namespace qfeat {

namespace {
std::atomic<int> g_override{0};

int env_cap() {
  const char* raw = std::getenv("QFEAT_THREADS");
  if (raw == nullptr) return 0;
  try {
    const int v = std::stoi(raw);
    return v > 0 ? v : 0;
  } catch (...) {
    return 0;
  }
}
}  // namespace

int thread_count() {
  const int forced = g_override.load();
  if (forced > 0) return forced;
  const int available = omp_get_max_threads();
  const int cap = env_cap();
  return cap > 0 && cap < available ? cap : available;
}

void set_thread_count(int n) { g_override.store(n > 0 ? n : 0); }

}  // namespace qfeat
