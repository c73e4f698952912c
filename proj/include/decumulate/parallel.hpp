#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace decumulate {

/// Process-wide worker count. Defaults to DECUMULATE_THREADS, then the core count.
inline std::size_t& thread_count() {
    static std::size_t n = [] {
        if (const char* env = std::getenv("DECUMULATE_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v > 0) return static_cast<std::size_t>(v);
        }
        return static_cast<std::size_t>(std::max(1u, std::thread::hardware_concurrency()));
    }();
    return n;
}

inline void set_thread_count(std::size_t n) { thread_count() = std::max<std::size_t>(1, n); }

/// Runs body(chunk_index, begin, end) over fixed-size chunks of [0, n).
/// The chunk layout depends only on n and chunk_size, so per-chunk partial
/// results reduced in chunk order are identical for any thread count.
template <typename Body>
void for_each_chunk(std::size_t n, std::size_t chunk_size, Body&& body) {
    const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
    const std::size_t workers = std::min(thread_count(), n_chunks);
    auto run = [&](std::size_t c) { body(c, c * chunk_size, std::min(n, (c + 1) * chunk_size)); };
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) run(c);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t c = w; c < n_chunks; c += workers) run(c);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
    return (n + chunk_size - 1) / chunk_size;
}

}  // namespace decumulate
