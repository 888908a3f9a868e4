#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace strainwars {

/// Worker count for replicate fan-out; 0 means one per hardware thread.
unsigned resolve_parallelism(unsigned requested) noexcept;

/// Evaluates fn(i) for i in [begin, end) on `parallelism` workers and returns
/// the results in index order. Work items are claimed from a shared counter,
/// so the assignment of items to workers varies but the output does not.
/// The first exception thrown by any item is rethrown after all workers stop.
template <class T, class Fn>
std::vector<T> parallel_map(std::uint64_t begin, std::uint64_t end, unsigned parallelism, Fn&& fn)
{
    std::vector<T> out(end > begin ? end - begin : 0);
    if (out.empty())
        return out;
    const unsigned workers = std::min<std::uint64_t>(resolve_parallelism(parallelism), out.size());

    std::atomic<std::uint64_t> next{begin};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto work = [&] {
        for (;;)
        {
            if (failed.load(std::memory_order_relaxed))
                return;
            const std::uint64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= end)
                return;
            try
            {
                out[i - begin] = fn(i);
            }
            catch (...)
            {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                failed = true;
            }
        }
    };

    if (workers <= 1)
    {
        work();
    }
    else
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work);
    }
    if (error)
        std::rethrow_exception(error);
    return out;
}

}  // namespace strainwars
