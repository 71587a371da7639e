#pragma once

// Periodic grid sampling and trigonometric fits on N^d grids (d = 2, 3),
// used to differentiate assembled conjugacies spectrally.

#include <array>
#include <complex>
#include <vector>

#include "mcf/series.hpp"

namespace mcf::grid {

using cplx = std::complex<double>;

struct PeriodicFit {
    int d = 2;
    int N = 64;
    std::vector<cplx> coef;  // flattened over k in [-N/2, N/2)^d

    std::size_t index(const std::array<int, 4>& k) const;
    cplx eval(const std::array<double, 4>& x) const;
    // directional derivative sum_k c_k 2 pi i (k.w) e^{2 pi i k.x}
    cplx eval_deriv(const std::array<double, 4>& x, const std::array<double, 4>& w) const;
};

// values indexed x = (i_0/N, ..., i_{d-1}/N), flattened row-major (last axis fastest)
PeriodicFit fit_periodic(int d, int N, const std::vector<cplx>& values);

std::size_t grid_size(int d, int N);
std::array<double, 4> grid_point(int d, int N, std::size_t flat);

}  // namespace mcf::grid
