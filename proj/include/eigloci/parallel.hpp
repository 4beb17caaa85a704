/**
 * @brief Deterministic data parallelism.
 *
 * Work is cut into chunks whose boundaries depend only on the problem size and
 * the grain, never on the worker count. Per-chunk partial results are combined
 * by the caller in chunk order, so floating reductions are bit-identical for
 * any number of workers.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace eigloci {

/// Worker count from EIGLOCI_WORKERS, defaulting to the hardware concurrency.
inline std::size_t worker_count() {
    if (const char* env = std::getenv("EIGLOCI_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

inline std::size_t chunk_count(std::size_t n, std::size_t grain) {
    grain = std::max<std::size_t>(grain, 1);
    return (n + grain - 1) / grain;
}

/**
 * Calls `body(chunk, begin, end)` for every chunk [k*grain, min(n, (k+1)*grain)).
 * The first exception thrown by any chunk is rethrown after all workers join.
 */
template <class Body>
void parallel_chunks(std::size_t n, std::size_t grain, Body&& body) {
    grain = std::max<std::size_t>(grain, 1);
    const std::size_t chunks = chunk_count(n, grain);
    if (chunks == 0) return;
    const std::size_t workers = std::min(worker_count(), chunks);
    if (workers <= 1) {
        for (std::size_t k = 0; k < chunks; ++k) body(k, k * grain, std::min(n, (k + 1) * grain));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= chunks) return;
            try {
                body(k, k * grain, std::min(n, (k + 1) * grain));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(chunks);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Element-wise loop: `f(i)` for i in [0, n).
template <class F>
void parallel_for(std::size_t n, std::size_t grain, F&& f) {
    parallel_chunks(n, grain, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) f(i);
    });
}

/**
 * Fixed-order reduction: `map(begin, end)` yields a partial value per chunk,
 * `combine(acc, part)` folds the partials in chunk order starting from `init`.
 */
template <class T, class Map, class Combine>
T parallel_reduce(std::size_t n, std::size_t grain, T init, Map&& map, Combine&& combine) {
    std::vector<T> parts(chunk_count(n, grain), init);
    parallel_chunks(n, grain, [&](std::size_t k, std::size_t b, std::size_t e) { parts[k] = map(b, e); });
    T acc = init;
    for (auto& p : parts) acc = combine(std::move(acc), std::move(p));
    return acc;
}

}  // namespace eigloci
