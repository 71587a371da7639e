#pragma once

// Parallel kernels with serial reference implementations.  Every kernel is
// bit-deterministic: results are independent of thread count and scheduling.
// Floating-point reductions use a fixed chunked pairwise association shared
// by the serial and OpenMP paths, so the two give identical bytes.

#include <omp.h>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace mcf::kernels {

bool parallel_enabled();
void set_parallel(bool on);
int thread_count();

// --- deterministic reductions ------------------------------------------------

// Pairwise sum with fixed chunk size (serial reference).
double sum_pairwise_serial(std::span<const double> xs);
// Same association, chunks computed concurrently.
double sum_pairwise_omp(std::span<const double> xs);
// Dispatch on parallel_enabled().
double sum_pairwise(std::span<const double> xs);

// --- grid map -----------------------------------------------------------------

// Evaluates fn(i) for i in [0, n); fn writes to disjoint slots.
void grid_map(std::size_t n, const std::function<void(std::size_t)>& fn);

// --- sorted-term combination (series normalization) --------------------------

// Stable-sorts (key, value) contributions by key and accumulates equal keys in
// insertion order; drops exact zeros.  C needs +=, == C{}.
template <class C>
void combine_terms(std::vector<std::pair<uint64_t, C>>& buf) {
    if (buf.empty()) return;
    auto by_key = [](const std::pair<uint64_t, C>& a, const std::pair<uint64_t, C>& b) {
        return a.first < b.first;
    };
    if (parallel_enabled() && buf.size() > (1u << 15)) {
        // chunk sort + in-order pairwise merges (stable); chunk layout is fixed
        std::size_t n = buf.size();
        constexpr std::size_t kSortChunk = 1u << 15;
        std::vector<std::pair<std::size_t, std::size_t>> ranges;
        for (std::size_t lo = 0; lo < n; lo += kSortChunk)
            ranges.emplace_back(lo, std::min(lo + kSortChunk, n));
        #pragma omp parallel for schedule(dynamic)
        for (long i = 0; i < static_cast<long>(ranges.size()); i++)
            std::stable_sort(buf.begin() + static_cast<long>(ranges[static_cast<std::size_t>(i)].first),
                             buf.begin() + static_cast<long>(ranges[static_cast<std::size_t>(i)].second),
                             by_key);
        while (ranges.size() > 1) {
            std::vector<std::pair<std::size_t, std::size_t>> next;
            for (std::size_t i = 0; i + 1 < ranges.size(); i += 2) {
                std::inplace_merge(buf.begin() + static_cast<long>(ranges[i].first),
                                   buf.begin() + static_cast<long>(ranges[i].second),
                                   buf.begin() + static_cast<long>(ranges[i + 1].second), by_key);
                next.emplace_back(ranges[i].first, ranges[i + 1].second);
            }
            if (ranges.size() % 2 == 1) next.push_back(ranges.back());
            ranges = next;
        }
    } else {
        std::stable_sort(buf.begin(), buf.end(), by_key);
    }
    std::size_t w = 0;
    for (std::size_t r = 0; r < buf.size();) {
        uint64_t key = buf[r].first;
        C acc = buf[r].second;
        std::size_t r2 = r + 1;
        while (r2 < buf.size() && buf[r2].first == key) {
            acc += buf[r2].second;
            r2++;
        }
        if (!(acc == C{})) {
            buf[w].first = key;
            buf[w].second = acc;
            w++;
        }
        r = r2;
    }
    buf.resize(w);
}

}  // namespace mcf::kernels
