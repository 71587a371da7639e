#pragma once

// delta(M) = inf_{k != 0} |k^T M|_inf, computed by LLL preconditioning plus
// complete Fincke-Pohst enumeration inside the certifying 2-norm ball.

#include "mcf/lattice.hpp"

namespace mcf {

struct LatticeMinResult {
    big_float value;
    Vec<big_int> argmin;      // k in the coordinates of the input matrix
    bool certified = false;   // enumeration covered the whole certifying ball
    long required_bound = 0;  // per-level coefficient radius needed for certification
};

LatticeMinResult lattice_min(const LatticeMatrix& M, long enumeration_bound);

}  // namespace mcf
