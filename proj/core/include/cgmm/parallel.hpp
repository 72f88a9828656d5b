#ifndef CGMM_PARALLEL_HPP
#define CGMM_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace cgmm {

// Fixed-size chunking: chunk boundaries depend only on (n, chunk_size), never
// on the thread count, so per-chunk partial results can be merged in chunk
// order and the reduction is bit-identical at any thread count.
inline constexpr std::size_t kVertexChunk = 2048; // vertices per chunk
inline constexpr std::size_t kGraphChunk = 8;     // graphs per chunk

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
    return (n + chunk_size - 1) / chunk_size;
}

// Runs fn(chunk_index, begin, end) over [0, n) split into fixed chunks.
// threads <= 1 runs inline. fn must only write chunk-local state.
void for_chunks(std::size_t n, std::size_t chunk_size, int threads,
                const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

int resolve_threads(int requested); // 0 -> hardware concurrency

} // namespace cgmm

#endif
