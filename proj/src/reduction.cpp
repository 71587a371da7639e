#include "mcf/reduction.hpp"

namespace mcf {

namespace {

struct GS {
    Mat<big_float> star;  // orthogonalized rows
    Mat<big_float> mu;    // mu(i,j) for j < i
    Vec<big_float> norm2; // |b*_i|^2

    void compute(const Mat<big_float>& B) {
        int d = B.n;
        star = B;
        mu = Mat<big_float>(d, d);
        norm2 = Vec<big_float>(d);
        for (int i = 0; i < d; i++) {
            for (int j = 0; j < i; j++) {
                big_float num(0);
                for (int c = 0; c < B.m; c++) num += B(i, c) * star(j, c);
                mu(i, j) = num / norm2[j];
                for (int c = 0; c < B.m; c++) star(i, c) -= mu(i, j) * star(j, c);
            }
            big_float n2(0);
            for (int c = 0; c < B.m; c++) n2 += star(i, c) * star(i, c);
            norm2[i] = n2;
            if (n2 == 0)
                throw McfError(ErrorCode::reduction_failure, "degenerate lattice basis");
        }
    }
};

}  // namespace

Mat<big_int> lll_reduce_rows(Mat<big_float>& B, double lovasz) {
    int d = B.n;
    Mat<big_int> U = Mat<big_int>::identity(d);
    GS gs;
    gs.compute(B);

    auto size_reduce = [&](int i, int j) {
        // b_i -= round(mu_ij) b_j
        big_float m = gs.mu(i, j);
        big_float rm = round(m);
        if (rm == 0) return;
        big_int q = rm.convert_to<big_int>();
        for (int c = 0; c < B.m; c++) B(i, c) -= rm * B(j, c);
        for (int c = 0; c < d; c++) U(i, c) -= q * U(j, c);
        for (int c = 0; c <= j; c++) gs.mu(i, c) -= rm * gs.mu(j, c);
        gs.mu(i, j) = m - rm;
    };

    big_float delta(lovasz);
    int k = 1;
    long guard = 0;
    while (k < d) {
        if (++guard > 100000)
            throw McfError(ErrorCode::reduction_failure, "LLL failed to terminate");
        for (int j = k - 1; j >= 0; j--) size_reduce(k, j);
        if (gs.norm2[k] >= (delta - gs.mu(k, k - 1) * gs.mu(k, k - 1)) * gs.norm2[k - 1]) {
            k++;
        } else {
            for (int c = 0; c < B.m; c++) std::swap(B(k, c), B(k - 1, c));
            for (int c = 0; c < d; c++) std::swap(U(k, c), U(k - 1, c));
            gs.compute(B);
            k = std::max(k - 1, 1);
        }
    }
    // final full size reduction pass
    gs.compute(B);
    for (int i = 1; i < d; i++)
        for (int j = i - 1; j >= 0; j--) size_reduce(i, j);
    return U;
}

IwasawaParams iwasawa_of_rows(const Mat<big_float>& M) {
    int d = M.n;
    // Gram-Schmidt processed bottom-up: g_d = row_d, then row_{d-1}, ...
    Mat<big_float> g = M;
    IwasawaParams ip;
    ip.a = Vec<big_float>(d);
    ip.u = Mat<big_float>(d, d);
    Vec<big_float> n2(d);
    for (int i = d - 1; i >= 0; i--) {
        for (int j = d - 1; j > i; j--) {
            big_float num(0);
            for (int c = 0; c < d; c++) num += M(i, c) * g(j, c);
            big_float coef = num / n2[j];
            ip.u(i, j) = coef;
            for (int c = 0; c < d; c++) g(i, c) -= coef * g(j, c);
        }
        big_float s(0);
        for (int c = 0; c < d; c++) s += g(i, c) * g(i, c);
        n2[i] = s;
        if (s == 0) throw McfError(ErrorCode::reduction_failure, "degenerate rows");
        ip.a[i] = sqrt(s);
    }
    return ip;
}

ReductionResult reduce_to_fundamental(const LatticeMatrix& M, const ReductionOptions& opt) {
    int d = M.dim();
    if (opt.exact_d2 && d != 2)
        throw McfError(ErrorCode::invalid_argument, "exact reduction only for d = 2");
    big_float det = determinant(M.entries);
    if (abs(abs(det) - 1) > big_float("1e-8"))
        throw McfError(ErrorCode::reduction_failure, "matrix does not have covolume one");

    // LLL runs on the reversed row order, so the output in the original
    // orientation has the bottom-up Gram-Schmidt (Iwasawa) shape of the
    // Siegel set, a_j >= kappa a_{j+1}.  Already-reduced inputs (e.g. the
    // identity) come back unchanged.
    Mat<big_float> B(d, d);
    for (int i = 0; i < d; i++)
        for (int j = 0; j < d; j++) B(i, j) = M.entries(d - 1 - i, j);
    double lovasz = opt.exact_d2 ? 0.999999999999 : opt.lovasz;
    Mat<big_int> U = lll_reduce_rows(B, lovasz);

    Mat<big_float> R(d, d);
    Mat<big_int> RU(d, d);
    for (int i = 0; i < d; i++)
        for (int j = 0; j < d; j++) {
            R(i, j) = B(d - 1 - i, j);
            RU(i, j) = U(d - 1 - i, d - 1 - j);
        }

    // Signed-permutation normalization absorbed into P: gamma = M_dd > 0.
    // A row-sign flip keeps the reduction intact; the row swap fires only in
    // the degenerate (rational-frequency) chart where M_dd = 0.
    if (R(d - 1, d - 1) == 0) {
        int pick = -1;
        big_float bestv(0);
        for (int i = 0; i < d - 1; i++)
            if (abs(R(i, d - 1)) > bestv) { bestv = abs(R(i, d - 1)); pick = i; }
        if (pick < 0)
            throw McfError(ErrorCode::reduction_failure, "singular reduced representative");
        for (int j = 0; j < d; j++) {
            std::swap(R(pick, j), R(d - 1, j));
            std::swap(RU(pick, j), RU(d - 1, j));
        }
    }
    if (R(d - 1, d - 1) < 0)
        for (int j = 0; j < d; j++) {
            R(d - 1, j) = -R(d - 1, j);
            RU(d - 1, j) = -RU(d - 1, j);
        }

    ReductionResult res;
    res.P = UnimodularMatrix(RU);
    res.M_red.entries = R;
    res.M_red.refresh_decomposition();
    return res;
}

}  // namespace mcf
