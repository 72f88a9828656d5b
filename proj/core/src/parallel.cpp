#include "cgmm/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace cgmm {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void for_chunks(std::size_t n, std::size_t chunk_size, int threads,
                const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t chunks = chunk_count(n, chunk_size);
    auto run_chunk = [&](std::size_t c) {
        const std::size_t begin = c * chunk_size;
        const std::size_t end = std::min(begin + chunk_size, n);
        fn(c, begin, end);
    };
    if (threads <= 1 || chunks == 1) {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
        return;
    }
    const int workers = static_cast<int>(std::min<std::size_t>(chunks, threads));
    // exceptions recorded per chunk; every chunk still runs and the
    // lowest-index error is rethrown, so the reported failure does not
    // depend on scheduling
    std::vector<std::exception_ptr> errors(chunks);
    std::atomic<bool> failed{false};
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
                try {
                    run_chunk(c);
                } catch (...) {
                    errors[c] = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed.load()) {
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
}

} // namespace cgmm
