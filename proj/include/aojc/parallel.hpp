#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace aojc {

/// Evaluates fn(0..count-1) on up to `workers` threads and returns results in
/// index order. The first exception thrown by any task is rethrown.
template <class Fn>
auto parallel_map(std::size_t count, int workers, Fn&& fn) {
    using R = std::invoke_result_t<Fn&, std::size_t>;
    std::vector<std::optional<R>> slots(count);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count);
            }
        }
    };

    const auto n_threads = static_cast<std::size_t>(std::clamp(workers, 1, 256));
    if (n_threads == 1 || count <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < std::min(n_threads, count); ++t) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);

    std::vector<R> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace aojc
