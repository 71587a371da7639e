#pragma once

// Shared helpers for the test suites: reference oracles and generators that
// stay independent of the library code they check.

#include <random>
#include <vector>

#include "mcf/lattice.hpp"
#include "mcf/num.hpp"

namespace mcf::test {

// Classical Gauss-map continued fraction of x in (0,1): partial quotients and
// convergents p_k/q_k.  This is the d = 2 oracle.
struct ClassicalCF {
    std::vector<big_int> a;       // partial quotients of [0; a1, a2, ...]
    std::vector<big_int> p, q;    // convergents, p[k]/q[k]

    static ClassicalCF expand(const big_float& x, int count) {
        // x in (0,1): a0 = 0, seeds p_{-1}/q_{-1} = 1/0, p_0/q_0 = 0/1
        ClassicalCF cf;
        big_float y = x;
        big_int pm1 = 1, p0 = 0, qm1 = 0, q0 = 1;
        for (int k = 0; k < count; k++) {
            y = 1 / y;
            big_float fl = floor(y);
            big_int ak = fl.convert_to<big_int>();
            y -= fl;
            cf.a.push_back(ak);
            big_int pk = ak * p0 + pm1;
            big_int qk = ak * q0 + qm1;
            cf.p.push_back(pk);
            cf.q.push_back(qk);
            pm1 = p0; p0 = pk;
            qm1 = q0; q0 = qk;
        }
        return cf;
    }
};

inline big_float golden_mean() { return (sqrt(big_float(5)) - 1) / 2; }
inline big_float sqrt2_minus_1() { return sqrt(big_float(2)) - 1; }

// real root of x^3 = x + 1 (plastic number), by Newton from 1.3
inline big_float plastic_number() {
    big_float x("1.3");
    for (int i = 0; i < 128; i++) x = x - (x * x * x - x - 1) / (3 * x * x - 1);
    return x;
}

inline FrequencyVector freq1(const big_float& a) {
    Vec<big_float> v(1);
    v[0] = a;
    return FrequencyVector(v);
}

inline FrequencyVector freq2(const big_float& a, const big_float& b) {
    Vec<big_float> v(2);
    v[0] = a;
    v[1] = b;
    return FrequencyVector(v);
}

// random unimodular integer matrix via row operations
inline UnimodularMatrix random_unimodular(int d, std::mt19937_64& rng, int ops = 12) {
    Mat<big_int> M = Mat<big_int>::identity(d);
    std::uniform_int_distribution<int> row(0, d - 1);
    std::uniform_int_distribution<int> coef(-3, 3);
    for (int t = 0; t < ops; t++) {
        int i = row(rng), j = row(rng);
        if (i == j) continue;
        big_int c = coef(rng);
        for (int col = 0; col < d; col++) M(i, col) += c * M(j, col);
    }
    return UnimodularMatrix(M);
}

}  // namespace mcf::test
