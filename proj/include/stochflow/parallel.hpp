#pragma once

// Index-parallel map over Monte Carlo replicates.
//
// map() fans out with OpenMP, map_serial() is the reference loop kept for
// tests and benchmarks. Both return results in index order, and callers
// reduce them serially, so the thread count never changes any output bit.

#include <cstddef>
#include <cstdint>
#include <exception>
#include <type_traits>
#include <vector>

namespace stochflow::parallel {

/// Worker count used by map(). Defaults to STOCHFLOW_THREADS or the OpenMP default.
int threads();
void set_threads(int count);

template <class F>
auto map_serial(std::size_t count, F&& fn) {
    using Result = std::invoke_result_t<F&, std::size_t>;
    std::vector<Result> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
}

template <class F>
auto map(std::size_t count, F&& fn) {
    using Result = std::invoke_result_t<F&, std::size_t>;
    std::vector<Result> out(count);
    std::vector<std::exception_ptr> errors(count);
    const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads())
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

/// RAII override of the worker count.
class ThreadScope {
public:
    explicit ThreadScope(int count) : previous_(threads()) { set_threads(count); }
    ~ThreadScope() { set_threads(previous_); }
    ThreadScope(const ThreadScope&) = delete;
    ThreadScope& operator=(const ThreadScope&) = delete;

private:
    int previous_;
};

}  // namespace stochflow::parallel
