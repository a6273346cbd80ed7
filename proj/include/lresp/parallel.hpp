#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lresp {

inline std::atomic<int>& thread_setting() {
    static std::atomic<int> n{0};
    return n;
}

// 0 means "use hardware concurrency".
inline void set_threads(int n) { thread_setting() = n; }

inline int thread_count() {
    int n = thread_setting();
    if (n > 0) return n;
    unsigned h = std::thread::hardware_concurrency();
    return h == 0 ? 1 : static_cast<int>(std::min(h, 64u));
}

// Runs fn(begin, end) over fixed-size chunks of [0, n). Chunk boundaries
// depend only on n and chunk, never on the thread count, so any per-chunk
// result merged in chunk order is deterministic.
template <class F>
void parallel_chunks(std::size_t n, std::size_t chunk, F&& fn) {
    if (n == 0) return;
    chunk = std::max<std::size_t>(chunk, 1);
    std::size_t nchunks = (n + chunk - 1) / chunk;
    int nt = static_cast<int>(std::min<std::size_t>(nchunks, static_cast<std::size_t>(thread_count())));
    if (nt <= 1) {
        for (std::size_t c = 0; c < nchunks; ++c) fn(c * chunk, std::min(n, (c + 1) * chunk));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t c = next.fetch_add(1);
                if (c >= nchunks) return;
                try {
                    fn(c * chunk, std::min(n, (c + 1) * chunk));
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                    next = nchunks;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace lresp
