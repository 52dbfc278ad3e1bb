#include "stochflow/parallel.hpp"

#include <omp.h>

#include <atomic>
#include <cstdlib>
#include <string>

namespace stochflow::parallel {

namespace {

int initial_threads() {
    if (const char* env = std::getenv("STOCHFLOW_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (...) {
        }
    }
    return omp_get_max_threads();
}

std::atomic<int>& thread_setting() {
    static std::atomic<int> value{initial_threads()};
    return value;
}

}  // namespace

int threads() { return thread_setting().load(); }

void set_threads(int count) { thread_setting().store(count > 0 ? count : 1); }

}  // namespace stochflow::parallel
