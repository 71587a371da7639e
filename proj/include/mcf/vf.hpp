#pragma once

// Vector fields X = X0_n + f on T^d x C^d, with X0_n(y) = omega^(n) +
// gamma_n^{-1} M^(n) y, and the resonance cones that drive the mode
// eliminations.

#include "mcf/series_ops.hpp"

namespace mcf::vf {

using namespace mcf::ser;

struct BaseField {
    int d = 2;
    std::array<double, kMaxD> omega{};
    std::array<std::array<double, kMaxD>, kMaxD> A{};  // gamma^{-1} M

    DivisorBase divisor() const {
        DivisorBase b;
        b.d = d;
        b.omega = omega;
        b.A = A;
        return b;
    }
    // X0(y) as a series (constant + linear-in-y modes)
    SeriesV as_series(const TruncSpec& spec) const;
};

struct VectorField {
    BaseField base;
    SeriesV f;      // perturbation
    Window window;  // current analyticity window (rho, (a, b))
};

// Resonance cone: I^- holds |k.omega| > sigma |k| (and, for the Hamiltonian
// variant, |nu| < tau |k|).
struct ResonanceCone {
    int d = 2;
    std::array<double, kMaxD> omega{};
    double sigma = 0.1;
    double tau = -1;  // < 0: vector-field cone without the Taylor condition

    bool in_minus(const Mode& m) const {
        double kw = 0;
        for (int i = 0; i < d; i++) kw += m.k[static_cast<size_t>(i)] * omega[static_cast<size_t>(i)];
        double kn = m.k_norm2(d);
        if (kn == 0) return false;
        if (std::abs(kw) <= sigma * kn) return false;
        if (tau >= 0 && !(m.nu_norm1(d) < tau * kn)) return false;
        return true;
    }
};

template <class C>
std::pair<Series<C>, Series<C>> project_resonant(const Series<C>& f, const ResonanceCone& cone) {
    // returns (plus, minus)
    auto [minus, plus] = split(f, std::function<bool(const Mode&)>(
                                      [&](const Mode& m) { return cone.in_minus(m); }));
    return {plus, minus};
}

}  // namespace mcf::vf
