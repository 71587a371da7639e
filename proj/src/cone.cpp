#include "mcf/cone.hpp"

#include <cmath>
#include <cstdlib>
#include <random>

namespace mcf {

namespace {

// |T^{-t} xi| / |xi| for a unit xi assembled from cone coordinates (u, s):
// xi = sqrt(1-s^2) u + s w_hat.
struct ConeEval {
    const Mat<big_float>& Tinv_t;
    const Mat<big_float>& V;      // onb of omega-perp
    const Vec<big_float>& w_hat;  // omega / |omega|
    int d;

    big_float eval(const Vec<big_float>& u, const big_float& s) const {
        big_float c = sqrt(big_float(1) - s * s);
        Vec<big_float> xi(d);
        for (int i = 0; i < d; i++) xi[i] = c * u[i] + s * w_hat[i];
        Vec<big_float> y = Tinv_t * xi;
        return norm2(y);
    }
};

}  // namespace

big_float omega_perp_contraction(const UnimodularMatrix& T, const FrequencyVector& omega) {
    Mat<big_float> V = orthogonal_complement_basis(omega.omega);
    Mat<big_float> Tinv_t = transpose(T.inverse().to_float());
    return restricted_spectral_norm(Tinv_t, V);
}

ConeContractionResult resonance_contraction(const UnimodularMatrix& T,
                                            const FrequencyVector& omega_prev, double sigma_prev,
                                            int sample_count, long integer_radius,
                                            unsigned rng_seed, const HypData* hyp) {
    int d = T.dim();
    if (sample_count < d)
        throw McfError(ErrorCode::invalid_argument, "sample_count must be >= d");
    if (sigma_prev <= 0) throw McfError(ErrorCode::invalid_argument, "sigma_prev must be > 0");

    Mat<big_float> V = orthogonal_complement_basis(omega_prev.omega);
    UnimodularMatrix Tinv = T.inverse();
    Mat<big_float> Tinv_t = transpose(Tinv.to_float());
    big_float wn = norm2(omega_prev.omega);
    Vec<big_float> w_hat(d);
    for (int i = 0; i < d; i++) w_hat[i] = omega_prev.omega[i] / wn;
    big_float s_max = big_float(sigma_prev) / wn;
    if (s_max > 1) s_max = 1;

    ConeEval ev{Tinv_t, V, w_hat, d};
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    auto random_u = [&]() {
        Vec<big_float> coeff(d - 1);
        double n2 = 0;
        std::vector<double> g(static_cast<size_t>(d - 1));
        do {
            n2 = 0;
            for (int i = 0; i < d - 1; i++) {
                g[static_cast<size_t>(i)] = gauss(rng);
                n2 += g[static_cast<size_t>(i)] * g[static_cast<size_t>(i)];
            }
        } while (n2 < 1e-12);
        double nn = std::sqrt(n2);
        Vec<big_float> u(d);
        for (int i = 0; i < d - 1; i++) {
            big_float c = big_float(g[static_cast<size_t>(i)] / nn);
            for (int r = 0; r < d; r++) u[r] += c * V(r, i);
        }
        return u;
    };

    big_float best(0);
    Vec<big_float> best_u(d);
    big_float best_s(0);

    // boundary and axis values first, then random interior samples
    {
        Vec<big_float> u0(d);
        for (int r = 0; r < d; r++) u0[r] = V(r, 0);
        for (double s0 : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
            big_float v = ev.eval(u0, big_float(s0) * s_max);
            if (v > best) { best = v; best_u = u0; best_s = big_float(s0) * s_max; }
        }
    }
    for (int it = 0; it < sample_count; it++) {
        Vec<big_float> u = random_u();
        big_float s = big_float(unif(rng)) * s_max;
        big_float v = ev.eval(u, s);
        if (v > best) { best = v; best_u = u; best_s = s; }
    }

    // local ascent from the best sample: golden-section in s, then small
    // perturbations of u (re-projected to the sphere in omega-perp)
    {
        big_float gr("0.6180339887498948482045868343656381177");
        big_float lo = -s_max, hi = s_max;
        for (int it = 0; it < 48; it++) {
            big_float m1 = hi - gr * (hi - lo);
            big_float m2 = lo + gr * (hi - lo);
            if (ev.eval(best_u, m1) < ev.eval(best_u, m2)) lo = m1; else hi = m2;
        }
        big_float sm = (lo + hi) / 2;
        big_float v = ev.eval(best_u, sm);
        if (v > best) { best = v; best_s = sm; }

        if (d > 2) {
            big_float step("0.2");
            for (int round = 0; round < 24; round++) {
                bool improved = false;
                for (int i = 0; i < d - 1; i++) {
                    for (int sgn : {1, -1}) {
                        Vec<big_float> u = best_u;
                        for (int r = 0; r < d; r++) u[r] += sgn * step * V(r, i);
                        // re-orthogonalize against omega and normalize
                        big_float pw(0);
                        for (int r = 0; r < d; r++) pw += u[r] * w_hat[r];
                        for (int r = 0; r < d; r++) u[r] -= pw * w_hat[r];
                        big_float nu = norm2(u);
                        if (nu == 0) continue;
                        for (int r = 0; r < d; r++) u[r] /= nu;
                        big_float v2 = ev.eval(u, best_s);
                        if (v2 > best) { best = v2; best_u = u; improved = true; }
                    }
                }
                if (!improved) step /= 2;
                if (step < big_float("1e-10")) break;
            }
        }
    }

    // exact check over resonant integer modes |k|_2 <= radius: fast double
    // prefilter with slack, exact arithmetic for the survivors
    {
        std::vector<double> omega_d(static_cast<size_t>(d));
        for (int i = 0; i < d; i++) omega_d[static_cast<size_t>(i)] = static_cast<double>(omega_prev.omega[i]);
        std::vector<long> k(static_cast<size_t>(d), 0);
        long R = integer_radius;
        double R2 = static_cast<double>(R) * static_cast<double>(R);
        std::vector<long> stack_init(static_cast<size_t>(d), -R);
        k = stack_init;
        bool done = false;
        while (!done) {
            double kw = 0, kn2 = 0;
            for (int i = 0; i < d; i++) {
                double ki = static_cast<double>(k[static_cast<size_t>(i)]);
                kw += ki * omega_d[static_cast<size_t>(i)];
                kn2 += ki * ki;
            }
            if (kn2 > 0 && kn2 <= R2 && std::abs(kw) <= sigma_prev * std::sqrt(kn2) * (1 + 1e-9)) {
                Vec<big_int> kk(d);
                for (int i = 0; i < d; i++) kk[i] = k[static_cast<size_t>(i)];
                big_float kwx(0);
                for (int i = 0; i < d; i++) kwx += big_float(kk[i]) * omega_prev.omega[i];
                big_float kn2x(0);
                for (int i = 0; i < d; i++) kn2x += big_float(kk[i]) * big_float(kk[i]);
                if (abs(kwx) <= big_float(sigma_prev) * sqrt(kn2x)) {
                    Vec<big_int> kp = mul_transpose(Tinv.entries, kk);  // T^{-t} k
                    big_float num(0);
                    for (int i = 0; i < d; i++) num += big_float(kp[i]) * big_float(kp[i]);
                    big_float ratio = sqrt(num / kn2x);
                    if (ratio > best) best = ratio;
                }
            }
            int lv = 0;
            while (lv < d) {
                if (++k[static_cast<size_t>(lv)] <= R) break;
                k[static_cast<size_t>(lv)] = -R;
                lv++;
            }
            done = lv == d;
        }
    }

    ConeContractionResult res;
    res.A_measured = static_cast<double>(best);
    if (hyp) {
        double spread = std::exp(-(1 - hyp->theta) * hyp->dt + hyp->d * hyp->theta * hyp->t_prev);
        res.A_bound = (hyp->Lambda / 2 + hyp->c6 * sigma_prev * std::exp(hyp->d * hyp->dt)) * spread;
    }
    return res;
}

DiophantineScanResult diophantine_scan(const FrequencyVector& alpha, double epsilon, long k_max) {
    if (epsilon < 0 || k_max < 1)
        throw McfError(ErrorCode::invalid_argument, "need epsilon >= 0 and k_max >= 1");
    int dm = alpha.alpha.size();  // d-1
    int d = dm + 1;
    big_float expo = big_float(d - 1) * (1 + big_float(epsilon));

    DiophantineScanResult res;
    res.min_value = -1;
    res.min_value_omega_form = -1;

    std::vector<long> m(static_cast<size_t>(dm), -k_max);
    bool done = false;
    while (!done) {
        bool zero = true;
        long minf = 0;
        for (int i = 0; i < dm; i++) {
            long a = std::labs(m[static_cast<size_t>(i)]);
            if (a != 0) zero = false;
            if (a > minf) minf = a;
        }
        if (!zero) {
            big_float ma(0);
            for (int i = 0; i < dm; i++) ma += big_float(m[static_cast<size_t>(i)]) * alpha.alpha[i];
            big_float kf = -round(ma);
            for (long off = -1; off <= 1; off++) {
                big_int k = kf.convert_to<big_int>() + off;
                big_float inner = abs(ma + big_float(k));
                big_float v2 = pow(big_float(minf), expo) * inner;
                big_float kn2(0);
                for (int i = 0; i < dm; i++)
                    kn2 += big_float(m[static_cast<size_t>(i)]) * big_float(m[static_cast<size_t>(i)]);
                kn2 += big_float(k) * big_float(k);
                big_float v3 = pow(sqrt(kn2), expo) * inner;
                if (res.min_value < 0 || v2 < res.min_value) {
                    res.min_value = v2;
                    res.argmin_m = Vec<big_int>(dm);
                    for (int i = 0; i < dm; i++) res.argmin_m[i] = m[static_cast<size_t>(i)];
                    res.argmin_k = k;
                }
                if (res.min_value_omega_form < 0 || v3 < res.min_value_omega_form)
                    res.min_value_omega_form = v3;
            }
        }
        int lv = 0;
        while (lv < dm) {
            if (++m[static_cast<size_t>(lv)] <= k_max) break;
            m[static_cast<size_t>(lv)] = -k_max;
            lv++;
        }
        done = lv == dm;
    }
    return res;
}

}  // namespace mcf
