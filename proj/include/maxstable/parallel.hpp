#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace maxstable {

namespace detail {
inline std::atomic<unsigned>& thread_cap() {
    static std::atomic<unsigned> cap{0};
    return cap;
}

inline bool& inside_parallel_region() {
    thread_local bool inside = false;
    return inside;
}
}  // namespace detail

/// Caps worker threads for all parallel loops; 0 restores the default
/// (hardware concurrency).
inline void set_thread_count(unsigned n) { detail::thread_cap() = n; }

inline unsigned thread_count() {
    const unsigned cap = detail::thread_cap();
    if (cap > 0) return cap;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n). Iterations must write only to slots owned by
/// their index; the result is then independent of the thread count. The first
/// exception thrown by any iteration is rethrown on the calling thread.
/// Nested calls run serially on the worker that issued them.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    const std::size_t workers = detail::inside_parallel_region() ? 1 : std::min<std::size_t>(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        detail::inside_parallel_region() = true;
        struct Reset {
            ~Reset() { detail::inside_parallel_region() = false; }
        } reset;
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace maxstable
