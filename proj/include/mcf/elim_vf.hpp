#pragma once

// Elimination of far-from-resonance modes of a vector field: solve
// I^-[(I + D_x u)^{-1}(X0 + f o U)] = 0 for the shift u supported on I^-.
// Newton steps preconditioned by the frozen DF(0)^{-1} (built from the
// small-divisor inverse and the f-hat correction), with the homotopy ODE
// du/dt = -DF(u)^{-1} F(0) as fallback.

#include <vector>

#include "mcf/vf.hpp"

namespace mcf::vf {

struct ElimOptions {
    double tol = 1e-13;        // stop when |F(u)| <= tol * max(|I- f|, floor)
    int max_iter = 16;
    int inner_iter = 8;        // preconditioned Richardson steps per Newton step
    bool permissive = true;    // only warn when the epsilon_n smallness gate fails
    int homotopy_steps = 16;
    double exp_tol = 1e-18;    // composition exponential cutoff
    int divisor_depth = 8;
    double divisor_tol = 1e-20;
    double prune_rel = 1e-18;  // working relative floor inside the solver
};

struct ElimResult {
    SeriesV u;
    VectorField X_plus;            // I+ projection of U* X
    std::vector<double> defects;   // |F(u_m)| per Newton iterate
    double residual = 0;           // final |I- U* X|
    double u_norm_primed = 0;
    double bound_42 = 0;           // (42 / sigma) |I- f|
    bool used_homotopy = false;
    bool epsilon_gate_ok = true;   // |f|' < eps_n of the smallness theorem
    double epsilon_n = 0;
    TruncationLog trunc;
};

ElimResult eliminate(const VectorField& X, const ResonanceCone& cone, const ElimOptions& opt);

// U* X for a given shift u (diagnostics / equivariance tests)
VectorField pullback_shift(const VectorField& X, const SeriesV& u, const ElimOptions& opt,
                           TruncationLog* log);

}  // namespace mcf::vf
