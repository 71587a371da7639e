#include "mcf/mat.hpp"

namespace mcf {

big_int determinant_exact(const Mat<big_int>& A) {
    assert(A.n == A.m);
    int d = A.n;
    Mat<big_int> W = A;
    big_int prev(1);
    int sign = 1;
    for (int c = 0; c < d - 1; c++) {
        if (W(c, c) == 0) {
            int piv = -1;
            for (int r = c + 1; r < d; r++)
                if (W(r, c) != 0) { piv = r; break; }
            if (piv < 0) return big_int(0);
            for (int j = 0; j < d; j++) std::swap(W(piv, j), W(c, j));
            sign = -sign;
        }
        for (int r = c + 1; r < d; r++) {
            for (int j = c + 1; j < d; j++)
                W(r, j) = (W(r, j) * W(c, c) - W(r, c) * W(c, j)) / prev;
            W(r, c) = 0;
        }
        prev = W(c, c);
    }
    return sign > 0 ? W(d - 1, d - 1) : -W(d - 1, d - 1);
}

namespace {
big_int minor_det(const Mat<big_int>& A, int skip_row, int skip_col) {
    int d = A.n;
    Mat<big_int> M(d - 1, d - 1);
    int ri = 0;
    for (int i = 0; i < d; i++) {
        if (i == skip_row) continue;
        int cj = 0;
        for (int j = 0; j < d; j++) {
            if (j == skip_col) continue;
            M(ri, cj) = A(i, j);
            cj++;
        }
        ri++;
    }
    return determinant_exact(M);
}
}  // namespace

Mat<big_int> unimodular_inverse(const Mat<big_int>& A, const big_int& det) {
    assert(det == 1 || det == -1);
    int d = A.n;
    Mat<big_int> inv(d, d);
    for (int i = 0; i < d; i++)
        for (int j = 0; j < d; j++) {
            big_int c = minor_det(A, j, i);
            if ((i + j) % 2 != 0) c = -c;
            inv(i, j) = det == 1 ? c : -c;
        }
    return inv;
}

big_float restricted_spectral_norm(const Mat<big_float>& A, const Mat<big_float>& V) {
    // B = A V (d x m); power iteration on B^T B.
    Mat<big_float> B = A * V;
    int m = B.m;
    Mat<big_float> G(m, m);  // Gram
    for (int i = 0; i < m; i++)
        for (int j = 0; j < m; j++) {
            big_float s(0);
            for (int r = 0; r < B.n; r++) s += B(r, i) * B(r, j);
            G(i, j) = s;
        }
    Vec<big_float> x(m);
    for (int i = 0; i < m; i++) x[i] = big_float(1) / (i + 1);
    big_float lambda(0);
    for (int it = 0; it < 200; it++) {
        Vec<big_float> y = G * x;
        big_float ny = norm2(y);
        if (ny == 0) return big_float(0);
        for (int i = 0; i < m; i++) x[i] = y[i] / ny;
        big_float prev = lambda;
        lambda = ny;
        if (it > 4 && abs(lambda - prev) <= lambda * pow(big_float(10), -40)) break;
    }
    return sqrt(lambda);
}

Mat<big_float> orthogonal_complement_basis(const Vec<big_float>& w) {
    int d = w.size();
    Mat<big_float> V(d, d - 1);
    big_float wn2 = norm2_sq(w);
    int col = 0;
    for (int i = 0; i < d && col < d - 1; i++) {
        // candidate e_i projected off w, then off previous columns
        Vec<big_float> v(d);
        v[i] = 1;
        big_float c = w[i] / wn2;
        for (int j = 0; j < d; j++) v[j] -= c * w[j];
        for (int p = 0; p < col; p++) {
            big_float s(0);
            for (int j = 0; j < d; j++) s += v[j] * V(j, p);
            for (int j = 0; j < d; j++) v[j] -= s * V(j, p);
        }
        big_float nv = norm2(v);
        if (nv < pow(big_float(10), -20)) continue;  // e_i nearly parallel to w
        for (int j = 0; j < d; j++) V(j, col) = v[j] / nv;
        col++;
    }
    if (col != d - 1) throw McfError(ErrorCode::invalid_argument, "degenerate direction vector");
    return V;
}

}  // namespace mcf
