#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace mcz {

/// Data-parallel loop over [0, count). Each index is processed exactly once and
/// writes only its own outputs, so results do not depend on the thread count.
template <typename F>
void parallel_for(std::int64_t count, F&& f, std::int64_t grain = 64) {
    const unsigned hw = std::thread::hardware_concurrency();
    if (hw <= 1 || count <= grain) {
        for (std::int64_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::int64_t begin = next.fetch_add(grain);
            if (begin >= count) return;
            const std::int64_t end = std::min(begin + grain, count);
            for (std::int64_t i = begin; i < end; ++i) f(i);
        }
    };
    std::vector<std::thread> pool;
    const unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>((count + grain - 1) / grain));
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

/// Deterministic parallel sum: fixed-size blocks are reduced independently and
/// combined in block order, so the floating-point result is identical for any
/// thread count.
template <typename F>
double parallel_block_sum(std::int64_t count, F&& term, std::int64_t block = 1024) {
    const std::int64_t nblocks = (count + block - 1) / block;
    std::vector<double> partial(nblocks, 0.0);
    parallel_for(
        nblocks,
        [&](std::int64_t b) {
            double s = 0.0;
            const std::int64_t end = std::min((b + 1) * block, count);
            for (std::int64_t i = b * block; i < end; ++i) s += term(i);
            partial[b] = s;
        },
        1);
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

} // namespace mcz
