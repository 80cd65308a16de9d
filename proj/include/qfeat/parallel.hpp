#pragma once

namespace qfeat {

// Worker count for parallel kernels: omp_get_max_threads(), capped by the
// QFEAT_THREADS environment variable when it holds a positive integer.
int thread_count();

// Overrides the environment for this process; 0 restores the default.
void set_thread_count(int n);

}  // namespace qfeat
