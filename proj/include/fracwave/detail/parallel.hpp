#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace fracwave::detail {

/// Runs f(i) for i in [0, n), either serially or as an OpenMP loop. The first
/// exception thrown by any iteration is rethrown after the loop.
template <typename F>
void for_each_index(std::ptrdiff_t n, bool parallel, F&& f) {
    if (!parallel) {
        for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex guard;
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            f(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace fracwave::detail
