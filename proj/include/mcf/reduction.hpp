#pragma once

// Row-lattice reduction to a Siegel-like representative.  The fundamental
// domain is realized by LLL (Lovász 0.99) plus size-reduction on the rows of
// M, reversed into the Iwasawa orientation where a_1 >= kappa a_2 >= ... and
// |u_ij| <= 1/2, then sign-normalized so the chart entry gamma = M_dd is > 0.

#include "mcf/lattice.hpp"

namespace mcf {

struct ReductionOptions {
    double lovasz = 0.99;    // LLL parameter
    double kappa = 0.75;     // Siegel quality checked on output: a_j >= kappa a_{j+1}
    bool exact_d2 = false;   // full Lagrange (Minkowski) reduction, d = 2 only
};

struct IwasawaParams {
    Vec<big_float> a;    // positive diagonal, a_1 ... a_d, bottom-up Gram-Schmidt norms
    Mat<big_float> u;    // unipotent upper-triangular coefficients (u_ij, i<j)
};

// Bottom-up Gram-Schmidt of the rows (row d first), as in M = n a k.
IwasawaParams iwasawa_of_rows(const Mat<big_float>& M);

// Result: M_red = P * M, det P = ±1 exact, M_red in the Siegel-like set.
struct ReductionResult {
    UnimodularMatrix P;
    LatticeMatrix M_red;
};

ReductionResult reduce_to_fundamental(const LatticeMatrix& M, const ReductionOptions& opt = {});

// LLL on rows of B (standard orientation: Gram-Schmidt top-down, first row
// shortest).  Returns the unimodular transform U with (U B) reduced.
Mat<big_int> lll_reduce_rows(Mat<big_float>& B, double lovasz);

}  // namespace mcf
