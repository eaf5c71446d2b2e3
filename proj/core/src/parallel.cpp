#include "stocnull/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace stocnull {

namespace {
std::atomic<unsigned> g_threads{1};

// Below this many indices the thread start-up cost dominates.
constexpr std::size_t kMinParallelCount = 64;
}  // namespace

void set_thread_count(unsigned threads) { g_threads.store(std::max(1u, threads)); }

unsigned thread_count() noexcept { return g_threads.load(); }

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& chunk_body) {
    const std::size_t workers = std::min<std::size_t>(thread_count(), count);
    if (workers <= 1 || count < kMinParallelCount) {
        if (count > 0) chunk_body(0, count);
        return;
    }
    const std::size_t chunk = (count + workers - 1) / workers;

    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto guarded = [&](std::size_t begin, std::size_t end) {
        try {
            chunk_body(begin, end);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(guarded, begin, end);
    }
    guarded(0, std::min(count, chunk));
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace stocnull
