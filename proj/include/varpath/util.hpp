#pragma once

// Deterministic parallel helpers. Work is split by index so results never
// depend on scheduling; the thread count is capped by VARPATH_THREADS.

#include <cstdlib>
#include <thread>
#include <vector>

namespace varpath {

inline int thread_cap() {
    if (const char* env = std::getenv("VARPATH_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// body(i) for i in [0, count); contiguous chunks per thread
template <class F>
void parallel_for(int count, F&& body) {
    int threads = std::min(thread_cap(), count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    int chunk = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        int lo = t * chunk;
        int hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] {
            for (int i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

// uniform double in [lo, hi) from raw generator bits; unlike
// std::uniform_real_distribution the mapping is identical on every platform
template <class Rng>
double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
}

}  // namespace varpath
