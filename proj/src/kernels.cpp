#include "mcf/kernels.hpp"

#include <atomic>

namespace mcf::kernels {

namespace {
std::atomic<bool> g_parallel{true};
constexpr std::size_t kChunk = 2048;

double sum_chunk(std::span<const double> xs) {
    std::size_t n = xs.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double v : xs) s += v;
        return s;
    }
    std::size_t half = n / 2;
    return sum_chunk(xs.first(half)) + sum_chunk(xs.subspan(half));
}

double tree_combine(std::vector<double>& parts) {
    std::size_t n = parts.size();
    while (n > 1) {
        std::size_t half = (n + 1) / 2;
        for (std::size_t i = 0; i < n / 2; i++) parts[i] = parts[2 * i] + parts[2 * i + 1];
        if (n % 2 == 1) parts[n / 2] = parts[n - 1];
        n = half;
    }
    return parts.empty() ? 0.0 : parts[0];
}
}  // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }
int thread_count() { return parallel_enabled() ? omp_get_max_threads() : 1; }

double sum_pairwise_serial(std::span<const double> xs) {
    std::size_t nchunks = (xs.size() + kChunk - 1) / kChunk;
    std::vector<double> parts(nchunks, 0.0);
    for (std::size_t c = 0; c < nchunks; c++) {
        std::size_t lo = c * kChunk;
        parts[c] = sum_chunk(xs.subspan(lo, std::min(kChunk, xs.size() - lo)));
    }
    return tree_combine(parts);
}

double sum_pairwise_omp(std::span<const double> xs) {
    std::size_t nchunks = (xs.size() + kChunk - 1) / kChunk;
    std::vector<double> parts(nchunks, 0.0);
    #pragma omp parallel for schedule(static)
    for (long c = 0; c < static_cast<long>(nchunks); c++) {
        std::size_t lo = static_cast<std::size_t>(c) * kChunk;
        parts[static_cast<std::size_t>(c)] =
            sum_chunk(xs.subspan(lo, std::min(kChunk, xs.size() - lo)));
    }
    return tree_combine(parts);
}

double sum_pairwise(std::span<const double> xs) {
    return parallel_enabled() ? sum_pairwise_omp(xs) : sum_pairwise_serial(xs);
}

void grid_map(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (parallel_enabled()) {
        #pragma omp parallel for schedule(static)
        for (long i = 0; i < static_cast<long>(n); i++) fn(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < n; i++) fn(i);
    }
}

}  // namespace mcf::kernels
