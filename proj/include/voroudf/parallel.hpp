#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace voroudf {

// Static partition over [0, n). Results must be written to preallocated,
// index-disjoint storage so parallel runs match the sequential order exactly.
inline void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    if (threads <= 1 || n < 2) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    threads = std::min<int>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (int i = t; i < n; i += threads) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

// splitmix64 mix for deriving independent per-task RNG streams.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t phase, std::uint64_t iter,
                                 std::uint64_t item) {
    std::uint64_t s = mix_seed(master ^ (phase * 0x9e3779b97f4a7c15ULL));
    s = mix_seed(s ^ iter);
    return mix_seed(s ^ item);
}

}  // namespace voroudf
