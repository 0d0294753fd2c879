#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace dstnet {

/// OpenMP loop over [0, n). Each index must write disjoint outputs, which keeps
/// results identical for any thread count.
template <class F>
inline void parallel_for(std::int64_t n, F&& f) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) f(i);
}

/// Reduction with a fixed chunk decomposition: partial sums are produced per
/// chunk in parallel and combined serially in chunk order, so the floating
/// point result does not depend on the thread count.
template <class F>
inline double deterministic_sum(std::int64_t n, F&& f) {
    constexpr std::int64_t kChunk = 4096;
    const std::int64_t nchunks = (n + kChunk - 1) / kChunk;
    if (nchunks <= 1) {
        double s = 0.0;
        for (std::int64_t i = 0; i < n; ++i) s += f(i);
        return s;
    }
    std::vector<double> partial(static_cast<size_t>(nchunks), 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < nchunks; ++c) {
        const std::int64_t lo = c * kChunk;
        const std::int64_t hi = std::min(n, lo + kChunk);
        double s = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) s += f(i);
        partial[static_cast<size_t>(c)] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace dstnet
