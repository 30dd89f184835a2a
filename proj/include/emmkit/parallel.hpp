#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace emmkit {

inline std::size_t default_threads() {
    const unsigned h = std::thread::hardware_concurrency();
    return h == 0 ? 1 : h;
}

/// Runs fn(i) for i in [0, n). Work is handed out in chunks; results must be written
/// to index-addressed storage so the outcome does not depend on the schedule.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    constexpr std::size_t chunk = 64;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex guard;
    auto worker = [&] {
        try {
            for (;;) {
                const std::size_t start = next.fetch_add(chunk);
                if (start >= n) break;
                const std::size_t stop = std::min(n, start + chunk);
                for (std::size_t i = start; i < stop; ++i) fn(i);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lk(guard);
            if (!failure) failure = std::current_exception();
            next.store(n);
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

inline double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 16) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t h = x.size() / 2;
    return pairwise_sum(x.first(h)) + pairwise_sum(x.subspan(h));
}

struct SampleStats {
    double mean = 0.0;
    double std_error = 0.0;
    double std_dev = 0.0;
    std::size_t n = 0;
};

inline SampleStats sample_stats(std::span<const double> x) {
    SampleStats s;
    s.n = x.size();
    if (x.empty()) return s;
    s.mean = pairwise_sum(x) / static_cast<double>(x.size());
    if (x.size() < 2) return s;
    std::vector<double> dev(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) dev[i] = (x[i] - s.mean) * (x[i] - s.mean);
    s.std_dev = std::sqrt(pairwise_sum(dev) / static_cast<double>(x.size() - 1));
    s.std_error = s.std_dev / std::sqrt(static_cast<double>(x.size()));
    return s;
}

} // namespace emmkit
