#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace dprp {

// Splits [0, count) into fixed chunks and runs body(chunk_index, begin, end)
// on a small thread pool. Chunking does not depend on the thread count, so
// per-chunk accumulators combined in chunk order give identical results on
// any machine.
template <typename Body>
void parallel_chunks(std::size_t count, std::size_t num_chunks, Body&& body) {
    if (count == 0) return;
    if (num_chunks == 0) num_chunks = 1;
    if (num_chunks > count) num_chunks = count;

    unsigned hw = std::thread::hardware_concurrency();
    if (hw <= 1 || num_chunks == 1) {
        for (std::size_t chunk = 0; chunk < num_chunks; ++chunk) {
            const std::size_t begin = count * chunk / num_chunks;
            const std::size_t end = count * (chunk + 1) / num_chunks;
            body(chunk, begin, end);
        }
        return;
    }

    std::vector<std::thread> workers;
    const unsigned num_workers = hw < num_chunks ? hw : static_cast<unsigned>(num_chunks);
    workers.reserve(num_workers);
    std::atomic<std::size_t> next_chunk{0};
    for (unsigned w = 0; w < num_workers; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                const std::size_t chunk = next_chunk.fetch_add(1);
                if (chunk >= num_chunks) return;
                const std::size_t begin = count * chunk / num_chunks;
                const std::size_t end = count * (chunk + 1) / num_chunks;
                body(chunk, begin, end);
            }
        });
    }
    for (auto& t : workers) t.join();
}

}  // namespace dprp
