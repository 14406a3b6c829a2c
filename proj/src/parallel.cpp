#include "gmssl/parallel.hpp"

#include <algorithm>
#include <exception>

namespace gmssl {

namespace {
std::atomic<int> g_thread_cap{0};
}

void set_thread_cap(int t) { g_thread_cap.store(t < 0 ? 0 : t); }

int thread_cap() {
    int cap = g_thread_cap.load();
    if (cap == 0) {
        unsigned hw = std::thread::hardware_concurrency();
        cap = hw ? int(hw) : 1;
    }
    return cap;
}

void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
    int workers = std::min<size_t>(thread_cap(), n);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    auto body = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) break;
            try {
                fn(i);
            } catch (...) {
                if (!failed.exchange(true)) err = std::current_exception();
                break;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace gmssl
