#pragma once

// The continued-fraction pipeline: reduce M0 E^{t_n} to the Siegel-like set,
// extract transfer matrices, and record every estimate the renormalization
// schemes consume (gamma/lambda/eta sequences, delta(M), norms, hyperbolicity
// and resonance-cone contraction factors).

#include <optional>
#include <vector>

#include "mcf/delta.hpp"
#include "mcf/lattice.hpp"
#include "mcf/reduction.hpp"
#include "mcf/schedule.hpp"

namespace mcf {

struct CFStep {
    int n = 0;
    big_float t, dt;
    UnimodularMatrix P, T;
    LatticeMatrix M_red;
    FrequencyVector alpha_n;          // omega_n = (alpha_n, 1)
    big_float gamma_n, lambda_n, eta_n;
    big_float delta_M;
    bool delta_certified = false;
    double sigma_n = 0;               // cone width attached to this step
    // Frobenius norms (dominate the spectral norm; envelope constants absorb it)
    big_float norm_M, norm_M_inv, norm_P, norm_P_inv, norm_T, norm_T_inv;
    // hyperbolicity data
    big_float omega_perp_contraction; // sup over omega_{n-1}-perp of |T^-t xi|/|xi|
    double hyp_exponent = 0;          // phi_n = (1-theta) dt_n - d theta t_{n-1}
    double A_measured = -1;           // resonance-cone contraction (set when T^{(n+1)} known)
    double A_bound = -1;
    int merged_gaps = 0;              // schedule times skipped because P did not change
};

struct CFOptions {
    ReductionOptions reduction;
    long enumeration_bound = 64;
    double rational_delta_floor = 1e-8;   // delta below this reports a rational frequency
    double identity_tol = 1e-10;          // relative tolerance for the floating identities
    int cone_samples = 128;               // A_n sampling
    long cone_integer_radius = 50;        // exact integer check radius |k| <= this
    unsigned rng_seed = 20240905;
};

struct CFDiagnostics {
    // per-run calibrated constants
    double Lambda = 0;      // hyperbolicity constant: contraction <= Lambda/2 e^{-phi_n}
    double c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0, c6 = 0;  // norm envelopes (M1)-(T2)
    double c7 = 0;          // gamma lower envelope
    double C_prime = 0;     // delta(M E^t) >= C' e^{-theta t}
    double delta_floor = 0; // min over steps of delta(M^{(n)})
    bool envelopes_ok = true;
    std::vector<std::string> violations;
};

struct CFRun {
    FrequencyVector alpha0;
    FlowParams flow;
    Schedule schedule;
    std::vector<CFStep> steps;  // step 0 is the unreduced chart at t = 0
    CFDiagnostics diag;
};

// Runs the algorithm over the schedule, merging gaps where P(t_n) = P(t_{n-1}).
// Internal identities (cocycle, gamma recursion, omega expressions) are
// verified to opt.identity_tol; violations throw precision_exhausted.
CFRun continued_fraction_run(const FrequencyVector& alpha, const Schedule& schedule,
                             const CFOptions& opt = {});

// Calibrates Lambda, c1..c7, C' over the run and fills per-step A bounds.
void compute_diagnostics(CFRun& run, const CFOptions& opt = {});

}  // namespace mcf
