#include "vecfin/common/thread_pool.hpp"

#include <algorithm>

namespace vecfin {

namespace {

std::pair<std::size_t, std::size_t> chunk(std::size_t n, std::size_t parts, std::size_t index) {
    const std::size_t base = n / parts;
    const std::size_t extra = n % parts;
    const std::size_t begin = index * base + std::min(index, extra);
    const std::size_t len = base + (index < extra ? 1 : 0);
    return {begin, begin + len};
}

}  // namespace

ThreadPool::ThreadPool(std::size_t workers) {
    if (workers == 0) {
        workers = default_workers();
    }
    threads_.reserve(workers - 1);
    for (std::size_t i = 1; i < workers; ++i) {
        threads_.emplace_back([this, i] { worker_loop(i); });
    }
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        stop_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) {
        t.join();
    }
}

std::size_t ThreadPool::default_workers() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

void ThreadPool::parallel_for(std::size_t n,
                              const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) {
        return;
    }
    if (threads_.empty() || n == 1) {
        fn(0, n);
        return;
    }
    {
        std::lock_guard<std::mutex> lock(mutex_);
        job_ = &fn;
        job_size_ = n;
        pending_ = threads_.size();
        error_ = nullptr;
        ++generation_;
    }
    wake_.notify_all();

    std::exception_ptr local;
    try {
        auto [b, e] = chunk(n, size(), 0);
        if (b < e) {
            fn(b, e);
        }
    } catch (...) {
        local = std::current_exception();
    }

    std::unique_lock<std::mutex> lock(mutex_);
    done_.wait(lock, [this] { return pending_ == 0; });
    job_ = nullptr;
    if (local) {
        std::rethrow_exception(local);
    }
    if (error_) {
        std::rethrow_exception(error_);
    }
}

void ThreadPool::worker_loop(std::size_t index) {
    std::size_t seen = 0;
    for (;;) {
        const std::function<void(std::size_t, std::size_t)>* job = nullptr;
        std::size_t n = 0;
        {
            std::unique_lock<std::mutex> lock(mutex_);
            wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) {
                return;
            }
            seen = generation_;
            job = job_;
            n = job_size_;
        }
        std::exception_ptr err;
        try {
            auto [b, e] = chunk(n, size(), index);
            if (b < e) {
                (*job)(b, e);
            }
        } catch (...) {
            err = std::current_exception();
        }
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (err && !error_) {
                error_ = err;
            }
            if (--pending_ == 0) {
                done_.notify_all();
            }
        }
    }
}

void parallel_for(ThreadPool* pool, std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
    if (pool == nullptr) {
        if (n > 0) {
            fn(0, n);
        }
        return;
    }
    pool->parallel_for(n, fn);
}

}  // namespace vecfin
