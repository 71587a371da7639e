#pragma once

// Resonance-cone contraction measurement and Diophantine scans.

#include "mcf/lattice.hpp"

namespace mcf {

struct ConeContractionResult {
    double A_measured = 0;  // sup over the real cone (sampled + ascended) and integer modes
    double A_bound = -1;    // analytic splitting bound, set when HypData supplied
};

struct HypData {
    double Lambda = 0;   // Prop. hypprop constant (calibrated)
    double c6 = 0;       // |T^{-1}| envelope constant
    double theta = 0;
    double dt = 0;       // delta t_{n}
    double t_prev = 0;   // t_{n-1}
    int d = 2;
};

// sup over unit xi with |xi . omega_prev| <= sigma_prev |xi| of |T^{-t} xi|.
// Sampling + golden-section ascent on the cone, plus an exact check over the
// integer modes of norm <= integer_radius.
ConeContractionResult resonance_contraction(const UnimodularMatrix& T,
                                            const FrequencyVector& omega_prev, double sigma_prev,
                                            int sample_count, long integer_radius,
                                            unsigned rng_seed,
                                            const HypData* hyp = nullptr);

// Largest singular value of T^{-t} restricted to the orthogonal complement
// of omega (the hyperbolic direction bundle).
big_float omega_perp_contraction(const UnimodularMatrix& T, const FrequencyVector& omega);

struct DiophantineScanResult {
    // min over 0 < |m|_inf <= k_max, nearest k, of |m|^{(d-1)(1+eps)} |m.alpha + k|
    big_float min_value;
    Vec<big_int> argmin_m;
    big_int argmin_k;
    // the omega-form over the same index set: ||(m,k)||^{(d-1)(1+eps)} |k.omega|
    big_float min_value_omega_form;
};

DiophantineScanResult diophantine_scan(const FrequencyVector& alpha, double epsilon, long k_max);

}  // namespace mcf
