// Deterministic block-parallel map: items are split into fixed-size blocks,
// workers claim blocks through an atomic counter, and every block writes only
// its own output slot.  Reductions then merge the slots in block order, so
// results are byte-identical for any worker count.
#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace fkmc {

inline std::atomic<int>& worker_count_slot() {
    static std::atomic<int> n{1};
    return n;
}

inline void set_worker_count(int n) { worker_count_slot().store(n < 1 ? 1 : n); }
inline int worker_count() { return worker_count_slot().load(); }

inline int64_t block_count(int64_t n_items, int64_t block_size) {
    return (n_items + block_size - 1) / block_size;
}

// fn(block_index, begin, end) with [begin, end) the item range of the block.
template <class Fn>
void for_blocks(int64_t n_items, int64_t block_size, Fn&& fn) {
    const int64_t n_blocks = block_count(n_items, block_size);
    const int workers = worker_count();
    if (workers <= 1 || n_blocks <= 1) {
        for (int64_t b = 0; b < n_blocks; ++b)
            fn(b, b * block_size, std::min(n_items, (b + 1) * block_size));
        return;
    }
    std::atomic<int64_t> next{0};
    auto run = [&] {
        for (;;) {
            int64_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            fn(b, b * block_size, std::min(n_items, (b + 1) * block_size));
        }
    };
    std::vector<std::thread> pool;
    int n_threads = static_cast<int>(std::min<int64_t>(workers, n_blocks));
    pool.reserve(n_threads - 1);
    for (int i = 1; i < n_threads; ++i) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
}

}  // namespace fkmc
