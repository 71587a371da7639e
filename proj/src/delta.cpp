#include "mcf/delta.hpp"

#include <omp.h>

#include "mcf/kernels.hpp"
#include "mcf/reduction.hpp"

namespace mcf {

namespace {

struct Enumerator {
    const Mat<big_float>& B;       // reduced rows
    Mat<big_float> mu;             // top-down Gram-Schmidt coefficients
    Vec<big_float> star2;          // |b*_i|^2
    long bound;
    int d;

    big_float best;                // current min of |z^T B|_inf
    Vec<big_int> best_z;
    bool clamped = false;
    long required = 0;

    explicit Enumerator(const Mat<big_float>& rows, long enumeration_bound)
        : B(rows), bound(enumeration_bound), d(rows.n) {
        mu = Mat<big_float>(d, d);
        star2 = Vec<big_float>(d);
        Mat<big_float> g = B;
        for (int i = 0; i < d; i++) {
            for (int j = 0; j < i; j++) {
                big_float num(0);
                for (int c = 0; c < d; c++) num += B(i, c) * g(j, c);
                mu(i, j) = num / star2[j];
                for (int c = 0; c < d; c++) g(i, c) -= mu(i, j) * g(j, c);
            }
            big_float s(0);
            for (int c = 0; c < d; c++) s += g(i, c) * g(i, c);
            star2[i] = s;
            if (s == 0) throw McfError(ErrorCode::reduction_failure, "degenerate basis");
        }
        best = -1;
    }

    void offer(const Vec<big_int>& z) {
        bool all_zero = true;
        for (int i = 0; i < d; i++)
            if (z[i] != 0) { all_zero = false; break; }
        if (all_zero) return;
        big_float v(0);
        for (int c = 0; c < d; c++) {
            big_float s(0);
            for (int i = 0; i < d; i++) s += big_float(z[i]) * B(i, c);
            s = abs(s);
            if (s > v) v = s;
        }
        if (best < 0 || v < best || (v == best && lex_less(z, best_z))) {
            if (best < 0 || v < best) best = v;
            best_z = z;
        }
    }

    static bool lex_less(const Vec<big_int>& a, const Vec<big_int>& b) {
        for (int i = 0; i < a.size(); i++) {
            if (a[i] < b[i]) return true;
            if (a[i] > b[i]) return false;
        }
        return false;
    }

    // levels i = d-1 .. 0; c_i = z_i + sum_{j>i} mu(j,i) z_j
    void recurse(int level, Vec<big_int>& z, const big_float& partial, const big_float& radius2) {
        big_float avail = radius2 - partial;
        if (avail < 0) return;
        big_float S(0);
        for (int j = level + 1; j < d; j++) S += mu(j, level) * big_float(z[j]);
        big_float r = sqrt(avail / star2[level]);
        big_float lo_f = ceil(-S - r), hi_f = floor(-S + r);
        long span = static_cast<long>(big_float(abs(lo_f) > abs(hi_f) ? abs(lo_f) : abs(hi_f)));
        if (span > required) required = span;
        big_int lo = lo_f.convert_to<big_int>();
        big_int hi = hi_f.convert_to<big_int>();
        if (lo < -bound) { lo = -bound; clamped = true; }
        if (hi > bound) { hi = bound; clamped = true; }
        for (big_int v = lo; v <= hi; ++v) {
            z[level] = v;
            big_float c = big_float(v) + S;
            big_float contrib = c * c * star2[level];
            if (level == 0)
                offer(z);
            else
                recurse(level - 1, z, partial + contrib, radius2);
        }
        z[level] = 0;
    }
};

}  // namespace

LatticeMinResult lattice_min(const LatticeMatrix& M, long enumeration_bound) {
    if (enumeration_bound < 1)
        throw McfError(ErrorCode::invalid_argument, "enumeration_bound must be >= 1");
    int d = M.dim();
    Mat<big_float> B = M.entries;
    Mat<big_int> U = lll_reduce_rows(B, 0.99);

    // initial candidate: shortest reduced row in the max norm
    big_float best(-1);
    for (int i = 0; i < d; i++) {
        big_float v(0);
        for (int c = 0; c < d; c++) {
            big_float s = abs(B(i, c));
            if (s > v) v = s;
        }
        if (best < 0 || v < best) best = v;
    }

    // any k with |k^T B|_inf <= best satisfies |k^T B|_2^2 <= d best^2
    big_float radius2 = big_float(d) * best * best;

    Enumerator en(B, enumeration_bound);
    Vec<big_int> z(d);
    if (d == 1) {
        z[0] = 1;
        en.offer(z);
        z[0] = 0;
    } else if (kernels::parallel_enabled()) {
        // split the outermost level across threads; exact-compare merge keeps
        // the result identical to the serial path
        big_float r = sqrt(radius2 / en.star2[d - 1]);
        long span = static_cast<long>(big_float(floor(r)));
        if (span > en.required) en.required = span;
        long lim = std::min(span, enumeration_bound);
        if (span > enumeration_bound) en.clamped = true;
        std::vector<Enumerator> locals;
        int nt = omp_get_max_threads();
        for (int t = 0; t < nt; t++) locals.emplace_back(B, enumeration_bound);
        #pragma omp parallel for schedule(dynamic)
        for (long v = -lim; v <= lim; v++) {
            Enumerator& loc = locals[static_cast<size_t>(omp_get_thread_num())];
            Vec<big_int> zz(d);
            zz[d - 1] = v;
            big_float c = big_float(v);
            loc.recurse(d - 2, zz, c * c * loc.star2[d - 1], radius2);
        }
        for (auto& loc : locals) {
            if (loc.best >= 0) {
                Vec<big_int> cand = loc.best_z;
                big_float save = loc.best;
                if (en.best < 0 || save < en.best ||
                    (save == en.best && Enumerator::lex_less(cand, en.best_z))) {
                    en.best = save;
                    en.best_z = cand;
                }
            }
            en.clamped = en.clamped || loc.clamped;
            en.required = std::max(en.required, loc.required);
        }
    } else {
        en.recurse(d - 1, z, big_float(0), radius2);
    }

    if (en.best < 0)
        throw McfError(ErrorCode::reduction_failure, "enumeration found no lattice point");

    LatticeMinResult res;
    res.value = en.best;
    res.certified = !en.clamped;
    res.required_bound = en.required;
    // map back to input coordinates: k = U^T z
    res.argmin = Vec<big_int>(d);
    for (int j = 0; j < d; j++) {
        big_int s(0);
        for (int i = 0; i < d; i++) s += U(i, j) * en.best_z[i];
        res.argmin[j] = s;
    }
    return res;
}

}  // namespace mcf
