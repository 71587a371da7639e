#pragma once

// Small dense vectors/matrices over an arbitrary scalar (big_float, big_int,
// double).  Dimensions here are tiny (d <= 8), so everything is O(d^3) direct.

#include <cassert>
#include <cmath>
#include <vector>

#include "mcf/num.hpp"

namespace mcf {

template <class T>
struct Vec {
    std::vector<T> a;

    Vec() = default;
    explicit Vec(int n) : a(static_cast<size_t>(n), T(0)) {}
    int size() const { return static_cast<int>(a.size()); }
    T& operator[](int i) { return a[static_cast<size_t>(i)]; }
    const T& operator[](int i) const { return a[static_cast<size_t>(i)]; }
};

template <class T>
struct Mat {
    int n = 0, m = 0;
    std::vector<T> a;

    Mat() = default;
    Mat(int rows, int cols) : n(rows), m(cols), a(static_cast<size_t>(rows) * cols, T(0)) {}
    T& operator()(int i, int j) { return a[static_cast<size_t>(i) * m + j]; }
    const T& operator()(int i, int j) const { return a[static_cast<size_t>(i) * m + j]; }

    static Mat identity(int d) {
        Mat I(d, d);
        for (int i = 0; i < d; i++) I(i, i) = T(1);
        return I;
    }
};

template <class T>
Mat<T> operator*(const Mat<T>& A, const Mat<T>& B) {
    assert(A.m == B.n);
    Mat<T> C(A.n, B.m);
    for (int i = 0; i < A.n; i++)
        for (int k = 0; k < A.m; k++) {
            const T& aik = A(i, k);
            if (aik == T(0)) continue;
            for (int j = 0; j < B.m; j++) C(i, j) += aik * B(k, j);
        }
    return C;
}

template <class T>
Vec<T> operator*(const Mat<T>& A, const Vec<T>& x) {
    assert(A.m == x.size());
    Vec<T> y(A.n);
    for (int i = 0; i < A.n; i++)
        for (int j = 0; j < A.m; j++) y[i] += A(i, j) * x[j];
    return y;
}

template <class T>
Vec<T> mul_transpose(const Mat<T>& A, const Vec<T>& x) {  // A^T x
    assert(A.n == x.size());
    Vec<T> y(A.m);
    for (int j = 0; j < A.m; j++)
        for (int i = 0; i < A.n; i++) y[j] += A(i, j) * x[i];
    return y;
}

template <class T>
Mat<T> transpose(const Mat<T>& A) {
    Mat<T> B(A.m, A.n);
    for (int i = 0; i < A.n; i++)
        for (int j = 0; j < A.m; j++) B(j, i) = A(i, j);
    return B;
}

template <class T>
T dot(const Vec<T>& x, const Vec<T>& y) {
    assert(x.size() == y.size());
    T s(0);
    for (int i = 0; i < x.size(); i++) s += x[i] * y[i];
    return s;
}

template <class T>
T norm2_sq(const Vec<T>& x) {
    T s(0);
    for (int i = 0; i < x.size(); i++) s += x[i] * x[i];
    return s;
}

inline big_float norm2(const Vec<big_float>& x) { return sqrt(norm2_sq(x)); }
inline double norm2(const Vec<double>& x) { return std::sqrt(norm2_sq(x)); }

template <class T>
T norm_inf(const Vec<T>& x) {
    using std::abs;
    T s(0);
    for (int i = 0; i < x.size(); i++) {
        T v = abs(x[i]);
        if (v > s) s = v;
    }
    return s;
}

template <class T>
T norm1(const Vec<T>& x) {
    using std::abs;
    T s(0);
    for (int i = 0; i < x.size(); i++) s += abs(x[i]);
    return s;
}

template <class T>
T norm_frobenius(const Mat<T>& A) {
    T s(0);
    for (const T& v : A.a) s += v * v;
    using std::sqrt;
    return sqrt(s);
}

// Induced 1-norm (max column abs sum); the matrix norm used for Q and T^t in
// the Hamiltonian estimates.
template <class T>
T norm_col1(const Mat<T>& A) {
    using std::abs;
    T best(0);
    for (int j = 0; j < A.m; j++) {
        T s(0);
        for (int i = 0; i < A.n; i++) s += abs(A(i, j));
        if (s > best) best = s;
    }
    return best;
}

// Gaussian elimination with partial pivoting; throws on (numerically) singular.
template <class T>
Mat<T> inverse(const Mat<T>& A) {
    using std::abs;
    assert(A.n == A.m);
    int d = A.n;
    Mat<T> W = A;
    Mat<T> I = Mat<T>::identity(d);
    for (int c = 0; c < d; c++) {
        int piv = c;
        for (int r = c + 1; r < d; r++)
            if (abs(W(r, c)) > abs(W(piv, c))) piv = r;
        if (W(piv, c) == T(0)) throw McfError(ErrorCode::reduction_failure, "singular matrix");
        if (piv != c)
            for (int j = 0; j < d; j++) {
                std::swap(W(piv, j), W(c, j));
                std::swap(I(piv, j), I(c, j));
            }
        T inv_p = T(1) / W(c, c);
        for (int j = 0; j < d; j++) {
            W(c, j) *= inv_p;
            I(c, j) *= inv_p;
        }
        for (int r = 0; r < d; r++) {
            if (r == c) continue;
            T f = W(r, c);
            if (f == T(0)) continue;
            for (int j = 0; j < d; j++) {
                W(r, j) -= f * W(c, j);
                I(r, j) -= f * I(c, j);
            }
        }
    }
    return I;
}

template <class T>
T determinant(const Mat<T>& A) {
    using std::abs;
    assert(A.n == A.m);
    int d = A.n;
    Mat<T> W = A;
    T det(1);
    for (int c = 0; c < d; c++) {
        int piv = c;
        for (int r = c + 1; r < d; r++)
            if (abs(W(r, c)) > abs(W(piv, c))) piv = r;
        if (W(piv, c) == T(0)) return T(0);
        if (piv != c) {
            for (int j = 0; j < d; j++) std::swap(W(piv, j), W(c, j));
            det = -det;
        }
        det *= W(c, c);
        for (int r = c + 1; r < d; r++) {
            T f = W(r, c) / W(c, c);
            if (f == T(0)) continue;
            for (int j = c; j < d; j++) W(r, j) -= f * W(c, j);
        }
    }
    return det;
}

// Exact integer determinant (Bareiss fraction-free elimination).
big_int determinant_exact(const Mat<big_int>& A);

// Exact inverse of a matrix with det = ±1 (adjugate method).
Mat<big_int> unimodular_inverse(const Mat<big_int>& A, const big_int& det);

// Largest singular value restricted to the column span of V (orthonormal
// columns): power iteration on (A V)^T (A V).  Deterministic start vector.
big_float restricted_spectral_norm(const Mat<big_float>& A, const Mat<big_float>& V);

// Orthonormal basis of the orthogonal complement of w (d-1 columns).
Mat<big_float> orthogonal_complement_basis(const Vec<big_float>& w);

template <class T>
Mat<double> to_double(const Mat<T>& A) {
    Mat<double> B(A.n, A.m);
    for (size_t i = 0; i < A.a.size(); i++) B.a[i] = static_cast<double>(A.a[i]);
    return B;
}

template <class T>
Vec<double> to_double(const Vec<T>& x) {
    Vec<double> y(x.size());
    for (int i = 0; i < x.size(); i++) y[i] = static_cast<double>(x[i]);
    return y;
}

}  // namespace mcf
