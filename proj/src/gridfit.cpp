#include "mcf/gridfit.hpp"

#include <cmath>

#include "mcf/num.hpp"

namespace mcf::grid {

std::size_t grid_size(int d, int N) {
    std::size_t s = 1;
    for (int i = 0; i < d; i++) s *= static_cast<std::size_t>(N);
    return s;
}

std::array<double, 4> grid_point(int d, int N, std::size_t flat) {
    std::array<double, 4> x{};
    for (int i = d - 1; i >= 0; i--) {
        x[static_cast<size_t>(i)] = static_cast<double>(flat % static_cast<size_t>(N)) / N;
        flat /= static_cast<size_t>(N);
    }
    return x;
}

std::size_t PeriodicFit::index(const std::array<int, 4>& k) const {
    std::size_t idx = 0;
    for (int i = 0; i < d; i++) {
        int ki = k[static_cast<size_t>(i)];
        idx = idx * static_cast<size_t>(N) + static_cast<size_t>(ki + N / 2);
    }
    return idx;
}

cplx PeriodicFit::eval(const std::array<double, 4>& x) const {
    cplx acc(0, 0);
    std::array<int, 4> k{};
    std::size_t total = coef.size();
    for (std::size_t flat = 0; flat < total; flat++) {
        std::size_t rem = flat;
        for (int i = d - 1; i >= 0; i--) {
            k[static_cast<size_t>(i)] = static_cast<int>(rem % static_cast<size_t>(N)) - N / 2;
            rem /= static_cast<size_t>(N);
        }
        if (coef[flat] == cplx(0, 0)) continue;
        double phase = 0;
        for (int i = 0; i < d; i++) phase += k[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
        acc += coef[flat] * std::polar(1.0, 2 * M_PI * phase);
    }
    return acc;
}

cplx PeriodicFit::eval_deriv(const std::array<double, 4>& x, const std::array<double, 4>& w) const {
    cplx acc(0, 0);
    std::array<int, 4> k{};
    for (std::size_t flat = 0; flat < coef.size(); flat++) {
        std::size_t rem = flat;
        for (int i = d - 1; i >= 0; i--) {
            k[static_cast<size_t>(i)] = static_cast<int>(rem % static_cast<size_t>(N)) - N / 2;
            rem /= static_cast<size_t>(N);
        }
        if (coef[flat] == cplx(0, 0)) continue;
        double kw = 0, phase = 0;
        for (int i = 0; i < d; i++) {
            kw += k[static_cast<size_t>(i)] * w[static_cast<size_t>(i)];
            phase += k[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
        }
        acc += coef[flat] * cplx(0, 2 * M_PI * kw) * std::polar(1.0, 2 * M_PI * phase);
    }
    return acc;
}

PeriodicFit fit_periodic(int d, int N, const std::vector<cplx>& values) {
    if (d < 1 || d > 3) throw McfError(ErrorCode::invalid_argument, "grid fit supports d <= 3");
    if (values.size() != grid_size(d, N))
        throw McfError(ErrorCode::invalid_argument, "grid size mismatch");
    // separable DFT, one axis at a time
    std::vector<cplx> work = values;
    std::vector<cplx> twiddle(static_cast<size_t>(N) * static_cast<size_t>(N));
    for (int k = 0; k < N; k++)
        for (int j = 0; j < N; j++)
            twiddle[static_cast<size_t>(k) * N + j] =
                std::polar(1.0 / N, -2 * M_PI * ((k - N / 2) * j) / static_cast<double>(N));
    std::size_t total = work.size();
    std::vector<cplx> next(total);
    // axis a: stride pattern; treat flat = (pre, i_a, post)
    std::size_t stride = 1;
    for (int a = d - 1; a >= 0; a--) {
        std::size_t outer = total / (static_cast<size_t>(N) * stride);
        for (std::size_t o = 0; o < outer; o++)
            for (std::size_t p = 0; p < stride; p++) {
                std::size_t base = o * static_cast<size_t>(N) * stride + p;
                for (int k = 0; k < N; k++) {
                    cplx acc(0, 0);
                    const cplx* tw = &twiddle[static_cast<size_t>(k) * N];
                    for (int j = 0; j < N; j++) acc += work[base + static_cast<size_t>(j) * stride] * tw[j];
                    next[base + static_cast<size_t>(k) * stride] = acc;
                }
            }
        std::swap(work, next);
        stride *= static_cast<size_t>(N);
    }
    PeriodicFit fit;
    fit.d = d;
    fit.N = N;
    fit.coef = std::move(work);
    return fit;
}

}  // namespace mcf::grid
