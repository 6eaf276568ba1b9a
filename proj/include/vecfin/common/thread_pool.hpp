#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace vecfin {

/// Fixed-size worker pool for data-parallel loops over an index range.
/// The range is split into contiguous chunks, one per worker; the calling
/// thread runs the first chunk.
class ThreadPool {
public:
    explicit ThreadPool(std::size_t workers = 0);
    ~ThreadPool();

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    std::size_t size() const noexcept { return threads_.size() + 1; }

    /// Calls fn(begin, end) on disjoint chunks covering [0, n). Blocks until
    /// every chunk has finished. The first exception thrown is rethrown.
    void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

    static std::size_t default_workers();

private:
    void worker_loop(std::size_t index);

    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(std::size_t, std::size_t)>* job_ = nullptr;
    std::size_t job_size_ = 0;
    std::size_t generation_ = 0;
    std::size_t pending_ = 0;
    std::exception_ptr error_;
    bool stop_ = false;
};

/// Runs inline when pool is null.
void parallel_for(ThreadPool* pool, std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace vecfin
