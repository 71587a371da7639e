#include "mcf/lattice.hpp"

#include <boost/math/special_functions/fpclassify.hpp>

namespace mcf {

namespace {
bool finite(const big_float& x) { return boost::math::isfinite(x); }
}

FrequencyVector::FrequencyVector(const Vec<big_float>& a) {
    int d = a.size() + 1;
    if (d < 2) throw McfError(ErrorCode::invalid_argument, "need d >= 2");
    for (int i = 0; i < a.size(); i++)
        if (!finite(a[i])) throw McfError(ErrorCode::invalid_argument, "non-finite frequency entry");
    alpha = a;
    omega = Vec<big_float>(d);
    for (int i = 0; i < d - 1; i++) omega[i] = a[i];
    omega[d - 1] = 1;
}

LatticeDecomposition LatticeMatrix::decompose(const Mat<big_float>& M) {
    int d = M.n;
    LatticeDecomposition dec;
    dec.gamma = M(d - 1, d - 1);
    if (dec.gamma == 0)
        throw McfError(ErrorCode::parameter_singularity, "gamma = 0: chart fails");
    dec.beta = Vec<big_float>(d - 1);
    for (int j = 0; j < d - 1; j++) dec.beta[j] = M(d - 1, j);
    dec.alpha = Vec<big_float>(d - 1);
    for (int i = 0; i < d - 1; i++) dec.alpha[i] = M(i, d - 1) / dec.gamma;
    dec.A = Mat<big_float>(d - 1, d - 1);
    for (int i = 0; i < d - 1; i++)
        for (int j = 0; j < d - 1; j++) dec.A(i, j) = M(i, j) - dec.alpha[i] * dec.beta[j];
    return dec;
}

Mat<big_float> LatticeMatrix::assemble(const LatticeDecomposition& dec) {
    int d = dec.alpha.size() + 1;
    Mat<big_float> M(d, d);
    for (int i = 0; i < d - 1; i++)
        for (int j = 0; j < d - 1; j++) M(i, j) = dec.A(i, j) + dec.alpha[i] * dec.beta[j];
    for (int i = 0; i < d - 1; i++) M(i, d - 1) = dec.alpha[i] * dec.gamma;
    for (int j = 0; j < d - 1; j++) M(d - 1, j) = dec.beta[j];
    M(d - 1, d - 1) = dec.gamma;
    return M;
}

void LatticeMatrix::refresh_decomposition() { decomposition = decompose(entries); }

UnimodularMatrix::UnimodularMatrix(const Mat<big_int>& e) : entries(e) {
    big_int dd = determinant_exact(e);
    if (dd != 1 && dd != -1)
        throw McfError(ErrorCode::invalid_argument, "matrix is not unimodular");
    det = static_cast<int>(dd);
}

UnimodularMatrix UnimodularMatrix::identity(int d) {
    UnimodularMatrix U;
    U.entries = Mat<big_int>::identity(d);
    U.det = 1;
    return U;
}

UnimodularMatrix UnimodularMatrix::inverse() const {
    UnimodularMatrix R;
    R.entries = unimodular_inverse(entries, big_int(det));
    R.det = det;
    return R;
}

UnimodularMatrix UnimodularMatrix::operator*(const UnimodularMatrix& o) const {
    UnimodularMatrix R;
    R.entries = entries * o.entries;
    R.det = det * o.det;
    return R;
}

Mat<big_int> UnimodularMatrix::block11() const {
    int d = dim();
    Mat<big_int> B(d - 1, d - 1);
    for (int i = 0; i < d - 1; i++)
        for (int j = 0; j < d - 1; j++) B(i, j) = entries(i, j);
    return B;
}

Vec<big_int> UnimodularMatrix::col12() const {
    int d = dim();
    Vec<big_int> v(d - 1);
    for (int i = 0; i < d - 1; i++) v[i] = entries(i, d - 1);
    return v;
}

Vec<big_int> UnimodularMatrix::row21() const {
    int d = dim();
    Vec<big_int> v(d - 1);
    for (int j = 0; j < d - 1; j++) v[j] = entries(d - 1, j);
    return v;
}

big_int UnimodularMatrix::scalar22() const { return entries(dim() - 1, dim() - 1); }

Mat<big_float> UnimodularMatrix::to_float() const {
    Mat<big_float> F(entries.n, entries.m);
    for (size_t i = 0; i < entries.a.size(); i++) F.a[i] = big_float(entries.a[i]);
    return F;
}

FlowParams FlowParams::standard(int d) {
    FlowParams p;
    p.r = Vec<big_float>(d);
    for (int i = 0; i < d - 1; i++) p.r[i] = -1;
    p.r[d - 1] = d - 1;
    return p;
}

void FlowParams::validate() const {
    int d = r.size();
    if (d < 2) throw McfError(ErrorCode::invalid_argument, "flow needs d >= 2");
    big_float s(0);
    for (int i = 0; i < d; i++) s += r[i];
    if (abs(s) > pow(big_float(10), -30))
        throw McfError(ErrorCode::invalid_argument, "flow exponents must sum to 0");
    for (int i = 0; i < d - 1; i++)
        if (r[i] >= 0) throw McfError(ErrorCode::invalid_argument, "r_1..r_{d-1} must be negative");
    if (r[d - 1] <= 0) throw McfError(ErrorCode::invalid_argument, "r_d must be positive");
}

LatticeMatrix embed_frequency(const FrequencyVector& fv) {
    int d = fv.dim();
    LatticeDecomposition dec;
    dec.alpha = fv.alpha;
    dec.A = Mat<big_float>::identity(d - 1);
    dec.beta = Vec<big_float>(d - 1);
    dec.gamma = 1;
    LatticeMatrix M;
    M.entries = LatticeMatrix::assemble(dec);
    M.decomposition = dec;
    return M;
}

LatticeMatrix geodesic_flow(const LatticeMatrix& M, const big_float& t, const FlowParams& params) {
    if (!finite(t)) throw McfError(ErrorCode::invalid_argument, "non-finite time");
    int d = M.dim();
    LatticeMatrix R;
    R.entries = Mat<big_float>(d, d);
    for (int j = 0; j < d; j++) {
        big_float f = exp(params.r[j] * t);
        if (!finite(f))
            throw McfError(ErrorCode::precision_exhausted, "flow factor overflow; raise precision");
        for (int i = 0; i < d; i++) R.entries(i, j) = M.entries(i, j) * f;
    }
    return R;
}

FrequencyVector fractional_action(const UnimodularMatrix& T, const FrequencyVector& fv) {
    int d = T.dim();
    if (fv.dim() != d) throw McfError(ErrorCode::invalid_argument, "dimension mismatch");
    Vec<big_int> t21 = T.row21();
    big_float den(static_cast<long>(0));
    den = big_float(T.scalar22());
    for (int j = 0; j < d - 1; j++) den += big_float(t21[j]) * fv.alpha[j];
    if (abs(den) < pow(big_float(10), -static_cast<int>(precision_decimal_digits()) + 6))
        throw McfError(ErrorCode::parameter_singularity, "vanishing denominator in fractional action");
    Mat<big_int> T11 = T.block11();
    Vec<big_int> t12 = T.col12();
    Vec<big_float> out(d - 1);
    for (int i = 0; i < d - 1; i++) {
        big_float num = big_float(t12[i]);
        for (int j = 0; j < d - 1; j++) num += big_float(T11(i, j)) * fv.alpha[j];
        out[i] = num / den;
    }
    return FrequencyVector(out);
}

}  // namespace mcf
