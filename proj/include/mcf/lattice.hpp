#pragma once

// Domain types for the flow on the space of lattices: frequency vectors,
// covolume-one lattice representatives with their (alpha, A, beta, gamma)
// chart, exact unimodular matrices and the diagonal flow exponents.

#include <optional>

#include "mcf/mat.hpp"
#include "mcf/num.hpp"

namespace mcf {

struct FrequencyVector {
    Vec<big_float> alpha;  // length d-1
    Vec<big_float> omega;  // length d, omega = (alpha, 1)

    FrequencyVector() = default;
    explicit FrequencyVector(const Vec<big_float>& a);

    int dim() const { return omega.size(); }
};

// Chart of Eq. (Malf): M = [[1, alpha],[0,1]] * [[A, 0],[beta^T, gamma]].
struct LatticeDecomposition {
    Vec<big_float> alpha;  // d-1
    Mat<big_float> A;      // (d-1)x(d-1)
    Vec<big_float> beta;   // d-1
    big_float gamma;       // nonzero
};

struct LatticeMatrix {
    Mat<big_float> entries;  // d x d, |det - 1| small
    std::optional<LatticeDecomposition> decomposition;

    int dim() const { return entries.n; }

    // Reads the chart off the entries; requires gamma = M_dd != 0.
    static LatticeDecomposition decompose(const Mat<big_float>& M);
    // Reassembles Eq. (Malf).
    static Mat<big_float> assemble(const LatticeDecomposition& dec);

    void refresh_decomposition();
};

struct UnimodularMatrix {
    Mat<big_int> entries;  // d x d integer, det = ±1
    int det = 1;

    UnimodularMatrix() = default;
    explicit UnimodularMatrix(const Mat<big_int>& e);

    int dim() const { return entries.n; }
    static UnimodularMatrix identity(int d);

    UnimodularMatrix inverse() const;
    UnimodularMatrix operator*(const UnimodularMatrix& o) const;
    bool operator==(const UnimodularMatrix& o) const { return entries.a == o.entries.a; }

    // Block access for the fractional-linear action: T = [[T11, t12],[t21^T, t22]].
    Mat<big_int> block11() const;
    Vec<big_int> col12() const;
    Vec<big_int> row21() const;
    big_int scalar22() const;

    Mat<big_float> to_float() const;
};

// Exponents of E^t = diag(e^{r_1 t}, ..., e^{r_d t}).
struct FlowParams {
    Vec<big_float> r;

    static FlowParams standard(int d);  // (-1,...,-1, d-1)
    void validate() const;              // sum 0, r_1..r_{d-1} < 0 < r_d
    int dim() const { return r.size(); }
};

// M0 with decomposition (alpha, I, 0, 1); det = 1 by construction.
LatticeMatrix embed_frequency(const FrequencyVector& alpha);

// M * E^t (column scaling); covolume preserved.
LatticeMatrix geodesic_flow(const LatticeMatrix& M, const big_float& t, const FlowParams& params);

// alpha' = (T11 alpha + t12) / (t21 . alpha + t22); throws on vanishing denominator.
FrequencyVector fractional_action(const UnimodularMatrix& T, const FrequencyVector& alpha);

}  // namespace mcf
